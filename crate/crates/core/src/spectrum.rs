//! Field-free two-magnon spectrum on a ring, resolved by center-of-mass
//! quasi-momentum.
//!
//! On a ring of odd length `L_t` every two-magnon configuration has a
//! translation orbit of exactly `L_t` members, and the orbits are labelled by
//! the ring distance `d = 1..=L` between the magnons. Projecting onto
//! momentum `K = 2 pi alpha / L_t` therefore leaves an `L x L` Hermitian block
//! per `K`, whose eigenvectors are simultaneous eigenstates of `H` and of the
//! translation `T|a, b> = |a+1, b+1>` (eigenvalue `exp(-iK)`).

use std::f64::consts::PI;
use std::sync::Arc;

use faer::{Mat, Side};
use num_complex::Complex64;
use serde::Serialize;

use crate::basis::{Boundary, ChainGeometry, Sector, SectorBasis, SectorState};
use crate::error::{Error, Result};
use crate::hamiltonian::{build_xxz_sector_hamiltonian, ModelParams, SectorOperator};

/// Quasi-momentum `K = 2 pi alpha / L_t`, `alpha` in `-L..=L`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct MomentumSector {
    pub alpha: i64,
    pub total_sites: usize,
}

impl MomentumSector {
    pub fn momentum(&self) -> f64 {
        2.0 * PI * self.alpha as f64 / self.total_sites as f64
    }

    /// `exp(i K L_t / 2) = (-1)^alpha`.
    pub fn twist(&self) -> f64 {
        if self.alpha.rem_euclid(2) == 0 {
            1.0
        } else {
            -1.0
        }
    }
}

/// Upper edge `2 |cos(K/2)|` of the free two-magnon continuum at momentum `K`.
pub fn continuum_edge(momentum: f64) -> f64 {
    2.0 * (momentum / 2.0).cos().abs()
}

/// Finite-size margin used by default when classifying bound states.
pub fn default_bound_tolerance(total_sites: usize) -> f64 {
    5.0 / total_sites as f64
}

/// Bound when `E` lies outside `[-2|cos(K/2)|, 2|cos(K/2)|]` by more than `tol`.
pub fn classify_bound(energy: f64, momentum: f64, tol: f64) -> bool {
    energy.abs() > continuum_edge(momentum) + tol
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumEntry {
    pub sector: MomentumSector,
    /// Position of the eigenvalue within its momentum sector, ascending in energy.
    pub level: usize,
    pub energy: f64,
    pub bound: bool,
    /// `|<psi_{K,r}|psi(0)>|^2`; zero until [`overlaps`] is applied.
    pub overlap: f64,
    /// Coefficients over the translation orbits `d = 1..=L`.
    #[serde(skip)]
    coefficients: Vec<Complex64>,
}

impl SpectrumEntry {
    pub fn momentum(&self) -> f64 {
        self.sector.momentum()
    }
}

#[derive(Debug, Clone)]
pub struct SpectrumResult {
    basis: Arc<SectorBasis>,
    delta: f64,
    tolerance: f64,
    entries: Vec<SpectrumEntry>,
    bound_fraction: Option<f64>,
}

impl SpectrumResult {
    pub fn basis(&self) -> &Arc<SectorBasis> {
        &self.basis
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Margin used for the bound flags.
    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    /// Entries ordered by `alpha`, then by energy.
    pub fn entries(&self) -> &[SpectrumEntry] {
        &self.entries
    }

    /// `sum P` over bound entries, once overlaps are computed.
    pub fn bound_fraction(&self) -> Option<f64> {
        self.bound_fraction
    }

    pub fn sector(&self, alpha: i64) -> impl Iterator<Item = &SpectrumEntry> {
        self.entries.iter().filter(move |e| e.sector.alpha == alpha)
    }

    /// Re-flags every entry with a different margin.
    pub fn reclassify(&mut self, tol: f64) {
        self.tolerance = tol;
        for e in &mut self.entries {
            e.bound = classify_bound(e.energy, e.momentum(), tol);
        }
        self.update_bound_fraction();
    }

    fn update_bound_fraction(&mut self) {
        if self.bound_fraction.is_some() {
            self.bound_fraction = Some(
                self.entries
                    .iter()
                    .filter(|e| e.bound)
                    .map(|e| e.overlap)
                    .sum(),
            );
        }
    }

    /// The eigenvector of `entry` expanded in the two-magnon basis.
    pub fn eigenvector(&self, entry: &SpectrumEntry) -> Vec<Complex64> {
        let orbits = OrbitMap::new(self.basis.geometry().total_sites());
        let k = entry.momentum();
        let norm = (orbits.n as f64).sqrt();
        self.basis
            .configurations()
            .iter()
            .map(|c| {
                let (d, shift) = orbits.locate(c.offsets()[0], c.offsets()[1]);
                entry.coefficients[d - 1] * Complex64::from_polar(1.0 / norm, k * shift as f64)
            })
            .collect()
    }
}

/// Translation-orbit bookkeeping on a ring of odd length `n`.
struct OrbitMap {
    n: usize,
    half: usize,
}

impl OrbitMap {
    fn new(n: usize) -> Self {
        Self { n, half: n / 2 }
    }

    /// `(d, j)` such that offsets `(a, b)` equal `T^j (0, d)`.
    fn locate(&self, a: usize, b: usize) -> (usize, usize) {
        let (a, b) = if a < b { (a, b) } else { (b, a) };
        let gap = b - a;
        if gap <= self.half {
            (gap, a)
        } else {
            (self.n - gap, b)
        }
    }
}

fn check_ring(geometry: &ChainGeometry) -> Result<()> {
    if geometry.boundary() != Boundary::Periodic {
        return Err(Error::InvalidGeometry(
            "the momentum-resolved spectrum needs a periodic chain".into(),
        ));
    }
    Ok(())
}

fn momentum_block(h: &SectorOperator, orbits: &OrbitMap, momentum: f64) -> Mat<Complex64> {
    let basis = h.basis();
    let size = orbits.half;
    let mut block = Mat::<Complex64>::zeros(size, size);
    for d in 1..=size {
        let row = basis
            .index_of_offsets(&[0, d])
            .expect("orbit representative is a valid configuration");
        let (cols, vals) = h.row(row);
        for (&c, &v) in cols.iter().zip(vals) {
            let config = basis.configurations()[c];
            let (d2, shift) = orbits.locate(config.offsets()[0], config.offsets()[1]);
            block[(d - 1, d2 - 1)] += Complex64::from_polar(v, momentum * shift as f64);
        }
    }
    block
}

/// Diagonalizes the field-free two-magnon Hamiltonian on a ring, one
/// momentum block at a time.
pub fn two_magnon_spectrum(geometry: ChainGeometry, delta: f64) -> Result<SpectrumResult> {
    check_ring(&geometry)?;
    let params = ModelParams::new(delta, 0.0)?;
    let basis = Arc::new(SectorBasis::new(geometry, Sector::TwoMagnon));
    let h = build_xxz_sector_hamiltonian(&basis, &params)?;
    let n = geometry.total_sites();
    let orbits = OrbitMap::new(n);
    let tolerance = default_bound_tolerance(n);
    let mut entries = Vec::with_capacity(basis.dim());
    for alpha in geometry.sites() {
        let sector = MomentumSector {
            alpha,
            total_sites: n,
        };
        let block = momentum_block(&h, &orbits, sector.momentum());
        let evd = block
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| Error::Eigen(format!("{e:?}")))?;
        let (u, s) = (evd.U(), evd.S().column_vector());
        for level in 0..orbits.half {
            let energy = s[level].re;
            entries.push(SpectrumEntry {
                sector,
                level,
                energy,
                bound: classify_bound(energy, sector.momentum(), tolerance),
                overlap: 0.0,
                coefficients: (0..orbits.half).map(|i| u[(i, level)]).collect(),
            });
        }
    }
    Ok(SpectrumResult {
        basis,
        delta,
        tolerance,
        entries,
        bound_fraction: None,
    })
}

/// Fills `P_{K,r} = |<psi_{K,r}|psi(0)>|^2` and the bound fraction.
pub fn overlaps(mut result: SpectrumResult, initial: &SectorState) -> Result<SpectrumResult> {
    if initial.basis() != &result.basis {
        return Err(Error::DimensionMismatch {
            expected: result.basis.dim(),
            actual: initial.dim(),
        });
    }
    let orbits = OrbitMap::new(result.basis.geometry().total_sites());
    let norm = (orbits.n as f64).sqrt();
    let configs = result.basis.configurations().to_vec();
    let mut projection = vec![Complex64::new(0.0, 0.0); orbits.half];
    let mut current_alpha = None;
    for entry in &mut result.entries {
        if current_alpha != Some(entry.sector.alpha) {
            current_alpha = Some(entry.sector.alpha);
            let k = entry.sector.momentum();
            projection.iter_mut().for_each(|p| *p = Complex64::new(0.0, 0.0));
            for (c, amp) in configs.iter().zip(initial.amplitudes()) {
                if amp.norm_sqr() == 0.0 {
                    continue;
                }
                let (d, shift) = orbits.locate(c.offsets()[0], c.offsets()[1]);
                projection[d - 1] += amp * Complex64::from_polar(1.0 / norm, -k * shift as f64);
            }
        }
        let amplitude: Complex64 = entry
            .coefficients
            .iter()
            .zip(&projection)
            .map(|(v, p)| v.conj() * p)
            .sum();
        entry.overlap = amplitude.norm_sqr();
    }
    result.bound_fraction = Some(0.0);
    result.update_bound_fraction();
    Ok(result)
}

/// Basis permutation of the unit translation `l -> l + 1` on a ring.
pub fn translation_permutation(basis: &SectorBasis) -> Result<Vec<usize>> {
    check_ring(basis.geometry())?;
    let n = basis.geometry().total_sites();
    basis
        .configurations()
        .iter()
        .map(|c| {
            let shifted: Vec<usize> = c.offsets().iter().map(|&o| (o + 1) % n).collect();
            basis
                .index_of_offsets(&shifted)
                .ok_or_else(|| Error::WrongSector("translation left the sector".into()))
        })
        .collect()
}

/// Largest entry of `T H T^-1 - H`.
pub fn translation_commutator_norm(h: &SectorOperator) -> Result<f64> {
    let perm = translation_permutation(h.basis())?;
    let moved = h.permuted(&perm)?;
    let mut worst: f64 = 0.0;
    for (r, c, v) in moved.triplets() {
        worst = worst.max((v - h.get(r, c)).abs());
    }
    for (r, c, v) in h.triplets() {
        worst = worst.max((v - moved.get(r, c)).abs());
    }
    Ok(worst)
}

/// Residuals of the relative-coordinate description
/// `Psi_{l1 l2} = exp(iK (l1 + l2)/2) phi(l2 - l1)` of one eigenstate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RelativeCheck {
    /// `max_d |E phi(d) - cos(K/2) (phi(d-1) + phi(d+1)) - Delta [d adjacent] phi(d)|`
    /// with `phi(0) = phi(L_t) = 0`.
    pub equation_residual: f64,
    /// `|phi(0)|` implied by the equation at `d = 1`.
    pub implied_phi_zero: f64,
    /// `max_d |phi(d) - exp(iK L_t/2) phi(L_t - d)|`.
    pub reflection_residual: f64,
    /// Largest mismatch between the eigenvector and the product ansatz.
    pub ansatz_residual: f64,
}

/// Extracts `phi` from the full eigenvector of `entry` and tests it against
/// the relative-coordinate eigen-equation.
pub fn relative_coordinate_check(result: &SpectrumResult, entry: &SpectrumEntry) -> RelativeCheck {
    let basis = &result.basis;
    let geometry = basis.geometry();
    let n = geometry.total_sites();
    let k = entry.momentum();
    let psi = result.eigenvector(entry);
    let left = geometry.min_site();
    let chart = |d: usize| -> Complex64 {
        let index = basis.index_of_offsets(&[0, d]).expect("valid chart configuration");
        let center = (2 * left + d as i64) as f64 / 2.0;
        psi[index] * Complex64::from_polar(1.0, -k * center)
    };
    let mut phi = vec![Complex64::new(0.0, 0.0); n + 1];
    for (d, slot) in phi.iter_mut().enumerate().take(n).skip(1) {
        *slot = chart(d);
    }
    let hop = (k / 2.0).cos();
    let delta = result.delta;
    let mut equation_residual: f64 = 0.0;
    for d in 1..n {
        let contact = if d == 1 || d == n - 1 { delta } else { 0.0 };
        let lhs = phi[d] * entry.energy;
        let rhs = (phi[d - 1] + phi[d + 1]) * hop + phi[d] * contact;
        equation_residual = equation_residual.max((lhs - rhs).norm());
    }
    let implied_phi_zero = ((phi[1] * (entry.energy - delta)) / hop - phi[2]).norm();
    let twist = entry.sector.twist();
    let reflection_residual = (1..n)
        .map(|d| (phi[d] - phi[n - d] * twist).norm())
        .fold(0.0, f64::max);
    let ansatz_residual = basis
        .configurations()
        .iter()
        .zip(&psi)
        .map(|(c, amp)| {
            let (a, b) = (c.offsets()[0], c.offsets()[1]);
            let center = (geometry.label(a) + geometry.label(b)) as f64 / 2.0;
            (amp - Complex64::from_polar(1.0, k * center) * phi[b - a]).norm()
        })
        .fold(0.0, f64::max);
    RelativeCheck {
        equation_residual,
        implied_phi_zero,
        reflection_residual,
        ansatz_residual,
    }
}

/// Eigenvalues of the relative-coordinate equation at momentum `alpha`,
/// restricted to solutions obeying the twisted boundary condition.
pub fn relative_coordinate_energies(total_sites: usize, delta: f64, alpha: i64) -> Result<Vec<f64>> {
    let geometry = ChainGeometry::with_total_sites(total_sites, Boundary::Periodic)?;
    if !geometry.contains(alpha) {
        return Err(Error::InvalidArgument(format!(
            "alpha {alpha} outside [-{0}, {0}]",
            geometry.half_length()
        )));
    }
    let sector = MomentumSector {
        alpha,
        total_sites,
    };
    let hop = (sector.momentum() / 2.0).cos();
    let size = geometry.half_length();
    // Basis (e_d + twist e_{L_t - d}) / sqrt(2), d = 1..=L.
    let m = Mat::from_fn(size, size, |i, j| {
        if i == j {
            let mut v = 0.0;
            if i == 0 {
                v += delta;
            }
            if i == size - 1 {
                v += sector.twist() * hop;
            }
            v
        } else if i.abs_diff(j) == 1 {
            hop
        } else {
            0.0
        }
    });
    let values = m
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Eigen(format!("{e:?}")))?;
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::make_initial_state;
    use crate::propagator::diagonalize;

    fn ring(total: usize) -> ChainGeometry {
        ChainGeometry::with_total_sites(total, Boundary::Periodic).unwrap()
    }

    #[test]
    fn rejects_open_chains() {
        let open = ChainGeometry::with_total_sites(7, Boundary::Open).unwrap();
        assert!(two_magnon_spectrum(open, -1.0).is_err());
    }

    #[test]
    fn three_site_ring_by_hand() {
        // All three configurations are adjacent: H = Delta + (J3 - I)/2.
        let result = two_magnon_spectrum(ring(3), -2.0).unwrap();
        let energies: Vec<(i64, f64)> = result.entries().iter().map(|e| (e.sector.alpha, e.energy)).collect();
        assert_eq!(energies.len(), 3);
        for (alpha, e) in energies {
            let want = if alpha == 0 { -1.0 } else { -2.5 };
            assert!((e - want).abs() < 1e-14);
        }
    }

    #[test]
    fn block_spectrum_matches_dense() {
        for (total, delta) in [(7, 0.0), (9, -1.5), (11, 3.0)] {
            let result = two_magnon_spectrum(ring(total), delta).unwrap();
            let basis = Arc::new(SectorBasis::new(ring(total), Sector::TwoMagnon));
            let h = build_xxz_sector_hamiltonian(&basis, &ModelParams::new(delta, 0.0).unwrap()).unwrap();
            let dense = diagonalize(&h).unwrap();
            let mut blocks: Vec<f64> = result.entries().iter().map(|e| e.energy).collect();
            blocks.sort_by(f64::total_cmp);
            for (a, b) in blocks.iter().zip(dense.values()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn eigenvectors_are_translation_eigenstates() {
        let result = two_magnon_spectrum(ring(9), -1.5).unwrap();
        let basis = result.basis().clone();
        let perm = translation_permutation(&basis).unwrap();
        let h = build_xxz_sector_hamiltonian(&basis, &ModelParams::new(-1.5, 0.0).unwrap()).unwrap();
        for entry in result.entries() {
            let v = result.eigenvector(entry);
            let hv = h.apply(&v).unwrap();
            let phase = Complex64::from_polar(1.0, entry.momentum());
            for i in 0..basis.dim() {
                assert!((hv[i] - v[i] * entry.energy).norm() < 1e-12);
                // Psi(T c) = exp(iK) Psi(c).
                assert!((v[perm[i]] - v[i] * phase).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn hamiltonian_commutes_with_translation() {
        let basis = Arc::new(SectorBasis::new(ring(11), Sector::TwoMagnon));
        let h = build_xxz_sector_hamiltonian(&basis, &ModelParams::new(-5.0, 0.0).unwrap()).unwrap();
        assert!(translation_commutator_norm(&h).unwrap() <= 1e-12);
    }

    #[test]
    fn no_bound_states_without_interaction() {
        let result = two_magnon_spectrum(ring(21), 0.0).unwrap();
        assert!(result.entries().iter().all(|e| !e.bound));
        let psi = make_initial_state(result.basis(), &[-1, 0]).unwrap();
        let result = overlaps(result, &psi).unwrap();
        assert_eq!(result.bound_fraction(), Some(0.0));
    }

    #[test]
    fn overlaps_sum_to_one() {
        let result = two_magnon_spectrum(ring(15), -1.5).unwrap();
        let psi = make_initial_state(result.basis(), &[-1, 0]).unwrap();
        let result = overlaps(result, &psi).unwrap();
        let total: f64 = result.entries().iter().map(|e| e.overlap).sum();
        assert!((total - 1.0).abs() < 1e-12);
        let bound = result.bound_fraction().unwrap();
        assert!(bound > 0.0 && bound < 1.0);
    }

    #[test]
    fn relative_equation_is_satisfied() {
        let result = two_magnon_spectrum(ring(13), -1.5).unwrap();
        for entry in result.entries() {
            let check = relative_coordinate_check(&result, entry);
            assert!(check.equation_residual < 1e-10, "{check:?}");
            assert!(check.implied_phi_zero < 1e-10, "{check:?}");
            assert!(check.reflection_residual < 1e-10, "{check:?}");
            assert!(check.ansatz_residual < 1e-10, "{check:?}");
        }
    }

    #[test]
    fn relative_energies_match_blocks() {
        let total = 13;
        let result = two_magnon_spectrum(ring(total), -5.0).unwrap();
        for alpha in -6..=6 {
            let relative = relative_coordinate_energies(total, -5.0, alpha).unwrap();
            let direct: Vec<f64> = result.sector(alpha).map(|e| e.energy).collect();
            assert_eq!(relative.len(), direct.len());
            for (a, b) in relative.iter().zip(&direct) {
                assert!((a - b).abs() < 1e-12);
            }
        }
        assert!(relative_coordinate_energies(total, -5.0, 7).is_err());
    }

    #[test]
    fn strong_attraction_gives_one_bound_state_per_momentum() {
        let result = two_magnon_spectrum(ring(21), -5.0).unwrap();
        for alpha in -10..=10 {
            assert_eq!(result.sector(alpha).filter(|e| e.bound).count(), 1);
        }
        let k0 = result.sector(0).next().unwrap();
        assert!((k0.energy - (-5.2)).abs() < 1e-6);
    }

    #[test]
    fn bound_classification_edges() {
        assert!(!classify_bound(-2.0, 0.0, 0.0));
        assert!(classify_bound(-2.01, 0.0, 0.0));
        assert!(!classify_bound(-2.01, 0.0, 0.05));
        assert!(classify_bound(0.2, PI, 0.1));
    }
}
