//! Observables of magnon-sector states.

use serde::Serialize;

use crate::basis::{ChainGeometry, Sector, SectorState};
use crate::error::{Error, Result};

/// `<S^z_l>` per site, indexed by offset `l + L`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpinDistribution {
    geometry: ChainGeometry,
    values: Vec<f64>,
}

impl SpinDistribution {
    pub fn geometry(&self) -> &ChainGeometry {
        &self.geometry
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `<S^z_l>` at physical site `site`.
    pub fn at(&self, site: i64) -> Result<f64> {
        Ok(self.values[self.geometry.offset(site)?])
    }

    /// Excitation weight `<S^z_l> + 1/2` per offset.
    pub fn excitation(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().map(|s| s + 0.5)
    }

    pub fn total_excitation(&self) -> f64 {
        self.excitation().sum()
    }

    /// Excitation weight on sites with `|l| > radius`.
    pub fn weight_outside(&self, radius: f64) -> f64 {
        self.geometry
            .sites()
            .zip(self.excitation())
            .filter(|(l, _)| (*l as f64).abs() > radius)
            .map(|(_, w)| w)
            .sum()
    }
}

pub fn spin_distribution(state: &SectorState) -> SpinDistribution {
    let basis = state.basis();
    let geometry = *basis.geometry();
    let mut values = vec![-0.5; geometry.total_sites()];
    for (config, p) in basis.configurations().iter().zip(state.probabilities()) {
        for &o in config.offsets() {
            values[o] += p;
        }
    }
    SpinDistribution { geometry, values }
}

/// Dense symmetric site-by-site matrix indexed by offsets.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SiteMatrix {
    geometry: ChainGeometry,
    data: Vec<f64>,
}

impl SiteMatrix {
    fn zeros(geometry: ChainGeometry) -> Self {
        let n = geometry.total_sites();
        Self {
            geometry,
            data: vec![0.0; n * n],
        }
    }

    pub fn geometry(&self) -> &ChainGeometry {
        &self.geometry
    }

    pub fn size(&self) -> usize {
        self.geometry.total_sites()
    }

    /// Entry at offsets `(i, j)`.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.size() + j]
    }

    /// Entry at physical sites `(l1, l2)`.
    pub fn at(&self, l1: i64, l2: i64) -> Result<f64> {
        Ok(self.get(self.geometry.offset(l1)?, self.geometry.offset(l2)?))
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.size();
        &self.data[i * n..(i + 1) * n]
    }

    fn set_symmetric(&mut self, i: usize, j: usize, v: f64) {
        let n = self.size();
        self.data[i * n + j] = v;
        self.data[j * n + i] = v;
    }
}

/// Longitudinal correlations `C_{l',l''} = <S^z_{l'} S^z_{l''}>`.
pub type CorrelationMatrix = SiteMatrix;

/// Two-magnon correlations `Gamma_{l',l''} = <S+_{l'} S+_{l''} S-_{l''} S-_{l'}>`.
pub type PairCorrelationMatrix = SiteMatrix;

fn require_two_magnons(state: &SectorState) -> Result<()> {
    match state.basis().sector() {
        Sector::TwoMagnon | Sector::BoundPair => Ok(()),
        Sector::OneMagnon => Err(Error::WrongSector(
            "correlations need a two-magnon state".into(),
        )),
    }
}

/// `<S^z_{l'} S^z_{l''}>`, evaluated as a diagonal expectation value over the
/// configuration probabilities.
pub fn longitudinal_correlation(state: &SectorState) -> Result<CorrelationMatrix> {
    require_two_magnons(state)?;
    let basis = state.basis();
    let geometry = *basis.geometry();
    let n = geometry.total_sites();
    let mut upper = vec![0.0; n * n];
    let mut spins = vec![-0.5; n];
    for (config, p) in basis.configurations().iter().zip(state.probabilities()) {
        if p == 0.0 {
            continue;
        }
        for &o in config.offsets() {
            spins[o] = 0.5;
        }
        for i in 0..n {
            let weighted = p * spins[i];
            let row = &mut upper[i * n + i..(i + 1) * n];
            for (acc, s) in row.iter_mut().zip(&spins[i..]) {
                *acc += weighted * s;
            }
        }
        for &o in config.offsets() {
            spins[o] = -0.5;
        }
    }
    let mut c = SiteMatrix::zeros(geometry);
    for i in 0..n {
        // (S^z)^2 = 1/4 identically.
        c.set_symmetric(i, i, 0.25);
        for j in i + 1..n {
            c.set_symmetric(i, j, upper[i * n + j]);
        }
    }
    Ok(c)
}

pub fn two_magnon_correlation(state: &SectorState) -> Result<PairCorrelationMatrix> {
    require_two_magnons(state)?;
    let basis = state.basis();
    let mut gamma = SiteMatrix::zeros(*basis.geometry());
    for (config, p) in basis.configurations().iter().zip(state.probabilities()) {
        if let &[a, b] = config.offsets() {
            gamma.set_symmetric(a, b, p);
        }
    }
    Ok(gamma)
}

/// Largest violation of `C = Gamma - S'/2 - S''/2 - 1/4` over `l' != l''`,
/// together with the largest deviation of the diagonal of `C` from `1/4`.
pub fn correlation_identity_residual(
    c: &CorrelationMatrix,
    gamma: &PairCorrelationMatrix,
    spins: &SpinDistribution,
) -> (f64, f64) {
    let n = c.size();
    let s = spins.values();
    let mut off: f64 = 0.0;
    let mut diag: f64 = 0.0;
    for i in 0..n {
        diag = diag.max((c.get(i, i) - 0.25).abs());
        for j in 0..n {
            if i != j {
                let predicted = gamma.get(i, j) - s[i] / 2.0 - s[j] / 2.0 - 0.25;
                off = off.max((c.get(i, j) - predicted).abs());
            }
        }
    }
    (off, diag)
}

/// For rows `l''` on which `Gamma` vanishes identically, `C_{l',l''} = -S^z_{l'}/2`.
/// Returns the largest violation and the number of such rows.
pub fn empty_row_residual(
    c: &CorrelationMatrix,
    gamma: &PairCorrelationMatrix,
    spins: &SpinDistribution,
    threshold: f64,
) -> (f64, usize) {
    let n = c.size();
    let s = spins.values();
    let mut worst: f64 = 0.0;
    let mut rows = 0;
    for j in 0..n {
        if gamma.row(j).iter().any(|g| g.abs() > threshold) {
            continue;
        }
        rows += 1;
        for i in 0..n {
            if i != j {
                worst = worst.max((c.get(i, j) + s[i] / 2.0).abs());
            }
        }
    }
    (worst, rows)
}

/// `F = |<psi(0)|psi(t)>|^2`.
pub fn fidelity(state_t: &SectorState, state_0: &SectorState) -> Result<f64> {
    Ok(state_0.inner(state_t)?.norm_sqr())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeviationSample {
    pub centroid: f64,
    pub deviation: f64,
    pub exponent: f64,
}

/// Excitation-weighted centroid `l_c` and generalized deviation
/// `D^x = sqrt(sum_l w_l |l - l_c|^x)` with unnormalized weights
/// `w_l = <S^z_l> + 1/2`.
pub fn generalized_deviation(distribution: &SpinDistribution, exponent: f64) -> Result<DeviationSample> {
    if !(exponent > 0.0 && exponent.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "deviation exponent must be positive (got {exponent})"
        )));
    }
    let geometry = distribution.geometry();
    let total = distribution.total_excitation();
    if total <= 0.0 {
        return Err(Error::ZeroWeight);
    }
    let centroid = geometry
        .sites()
        .zip(distribution.excitation())
        .map(|(l, w)| l as f64 * w)
        .sum::<f64>()
        / total;
    let spread: f64 = geometry
        .sites()
        .zip(distribution.excitation())
        .map(|(l, w)| w * (l as f64 - centroid).abs().powf(exponent))
        .sum();
    Ok(DeviationSample {
        centroid,
        deviation: spread.max(0.0).sqrt(),
        exponent,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{make_initial_state, Boundary, SectorBasis};
    use num_complex::Complex64;
    use std::sync::Arc;

    fn basis(total: usize) -> Arc<SectorBasis> {
        let g = ChainGeometry::with_total_sites(total, Boundary::Open).unwrap();
        Arc::new(SectorBasis::new(g, Sector::TwoMagnon))
    }

    fn random_state(basis: &Arc<SectorBasis>, seed: u64) -> SectorState {
        // Small LCG; the test only needs an arbitrary dense state.
        let mut x = seed;
        let mut next = || {
            x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((x >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let raw: Vec<Complex64> = (0..basis.dim()).map(|_| Complex64::new(next(), next())).collect();
        let norm = raw.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        SectorState::new(basis.clone(), raw.into_iter().map(|a| a / norm).collect()).unwrap()
    }

    #[test]
    fn product_state_observables() {
        let b = basis(11);
        let psi = make_initial_state(&b, &[-1, 0]).unwrap();
        let s = spin_distribution(&psi);
        for l in b.geometry().sites() {
            let want = if l == -1 || l == 0 { 0.5 } else { -0.5 };
            assert_eq!(s.at(l).unwrap(), want);
        }
        let c = longitudinal_correlation(&psi).unwrap();
        assert_eq!(c.at(-1, 0).unwrap(), 0.25);
        assert_eq!(c.at(-1, 5).unwrap(), -0.25);
        assert_eq!(c.at(3, 5).unwrap(), 0.25);
        let g = two_magnon_correlation(&psi).unwrap();
        assert_eq!(g.at(-1, 0).unwrap(), 1.0);
        assert_eq!(g.at(0, -1).unwrap(), 1.0);
        let total: f64 = (0..g.size()).flat_map(|i| (i + 1..g.size()).map(move |j| (i, j))).map(|(i, j)| g.get(i, j)).sum();
        assert_eq!(total, 1.0);
    }

    #[test]
    fn identity_holds_for_dense_states() {
        let b = basis(9);
        for seed in 1..4 {
            let psi = random_state(&b, seed);
            let s = spin_distribution(&psi);
            assert!((s.total_excitation() - 2.0).abs() < 1e-12);
            let c = longitudinal_correlation(&psi).unwrap();
            let g = two_magnon_correlation(&psi).unwrap();
            let (off, diag) = correlation_identity_residual(&c, &g, &s);
            assert!(off < 1e-12, "off-diagonal residual {off}");
            assert_eq!(diag, 0.0);
            for i in 0..c.size() {
                for j in 0..c.size() {
                    assert_eq!(c.get(i, j), c.get(j, i));
                    assert!(c.get(i, j).abs() <= 0.25 + 1e-15);
                }
            }
        }
    }

    #[test]
    fn empty_rows_follow_single_site_law() {
        let b = basis(9);
        let psi = make_initial_state(&b, &[-1, 1]).unwrap();
        let s = spin_distribution(&psi);
        let c = longitudinal_correlation(&psi).unwrap();
        let g = two_magnon_correlation(&psi).unwrap();
        let (worst, rows) = empty_row_residual(&c, &g, &s, 0.0);
        assert_eq!(rows, 7);
        assert!(worst < 1e-15);
    }

    #[test]
    fn deviation_of_adjacent_pair() {
        let b = basis(11);
        let psi = make_initial_state(&b, &[-1, 0]).unwrap();
        let s = spin_distribution(&psi);
        let half = generalized_deviation(&s, 0.5).unwrap();
        assert!((half.centroid + 0.5).abs() < 1e-15);
        assert!((half.deviation - (2.0 * 0.5_f64.sqrt()).sqrt()).abs() < 1e-12);
        assert!((half.deviation - 1.18921).abs() < 1e-5);
        let two = generalized_deviation(&s, 2.0).unwrap();
        assert!((two.deviation - 0.5_f64.sqrt()).abs() < 1e-12);
        assert!(generalized_deviation(&s, 0.0).is_err());
    }

    #[test]
    fn mirror_symmetric_distribution_has_zero_centroid() {
        let b = basis(11);
        let psi = make_initial_state(&b, &[-3, 3]).unwrap();
        let d = generalized_deviation(&spin_distribution(&psi), 0.5).unwrap();
        assert_eq!(d.centroid, 0.0);
    }

    #[test]
    fn fidelity_limits() {
        let b = basis(7);
        let a = make_initial_state(&b, &[-1, 0]).unwrap();
        let c = make_initial_state(&b, &[1, 2]).unwrap();
        assert_eq!(fidelity(&a, &a).unwrap(), 1.0);
        assert_eq!(fidelity(&a, &c).unwrap(), 0.0);
        let other = make_initial_state(&basis(5), &[-1, 0]).unwrap();
        assert!(fidelity(&a, &other).is_err());
    }

    #[test]
    fn one_magnon_state_has_no_pair_correlations() {
        let g = ChainGeometry::with_total_sites(5, Boundary::Open).unwrap();
        let b = Arc::new(SectorBasis::new(g, Sector::OneMagnon));
        let psi = make_initial_state(&b, &[1]).unwrap();
        assert!(two_magnon_correlation(&psi).is_err());
        assert!((spin_distribution(&psi).total_excitation() - 1.0).abs() < 1e-15);
    }
}
