//! Sector Hamiltonians of the XXZ chain in a gradient field.
//!
//! In the hard-core boson picture the model reads
//! `H = sum_l [ J/2 (a+_l a_{l+1} + h.c.) + Delta n_l n_{l+1} + B l n_l ]`
//! with `J = 1`. Energies are measured from the all-down state.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::Arc;

use faer::Mat;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::basis::{Boundary, ChainGeometry, Sector, SectorBasis, SectorState};
use crate::error::{Error, Result};

/// Exchange energy; the unit of energy (and `hbar = 1`).
pub const EXCHANGE: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    delta: f64,
    gradient: f64,
}

impl ModelParams {
    pub fn new(delta: f64, gradient: f64) -> Result<Self> {
        if !delta.is_finite() || !gradient.is_finite() {
            return Err(Error::InvalidParams(format!(
                "Delta and B must be finite (got Delta={delta}, B={gradient})"
            )));
        }
        Ok(Self { delta, gradient })
    }

    pub fn exchange(&self) -> f64 {
        EXCHANGE
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn gradient(&self) -> f64 {
        self.gradient
    }
}

/// Real symmetric sparse operator on a sector basis, stored row-major with
/// ascending columns inside each row.
#[derive(Debug, Clone, PartialEq)]
pub struct SectorOperator {
    basis: Arc<SectorBasis>,
    row_offsets: Vec<usize>,
    cols: Vec<usize>,
    values: Vec<f64>,
}

impl SectorOperator {
    /// Assembles from `(row, col, value)` triples; duplicates are summed and
    /// exact zeros dropped.
    pub fn from_triplets(
        basis: Arc<SectorBasis>,
        triplets: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        let dim = basis.dim();
        let mut merged: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for (r, c, v) in triplets {
            if r >= dim || c >= dim {
                return Err(Error::IndexOutOfRange {
                    index: r.max(c),
                    dim,
                });
            }
            *merged.entry((r, c)).or_insert(0.0) += v;
        }
        let mut row_offsets = vec![0; dim + 1];
        let mut cols = Vec::with_capacity(merged.len());
        let mut values = Vec::with_capacity(merged.len());
        for ((r, c), v) in merged {
            if v != 0.0 {
                row_offsets[r + 1] += 1;
                cols.push(c);
                values.push(v);
            }
        }
        for r in 0..dim {
            row_offsets[r + 1] += row_offsets[r];
        }
        Ok(Self {
            basis,
            row_offsets,
            cols,
            values,
        })
    }

    pub fn zero(basis: Arc<SectorBasis>) -> Self {
        let dim = basis.dim();
        Self {
            basis,
            row_offsets: vec![0; dim + 1],
            cols: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn basis(&self) -> &Arc<SectorBasis> {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Column indices and values of one row.
    pub fn row(&self, row: usize) -> (&[usize], &[f64]) {
        let range = self.row_offsets[row]..self.row_offsets[row + 1];
        (&self.cols[range.clone()], &self.values[range])
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        let (cols, vals) = self.row(row);
        cols.binary_search(&col).map_or(0.0, |k| vals[k])
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.get(i, i)).collect()
    }

    /// Stored entries in row-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.dim()).flat_map(move |r| {
            let (cols, vals) = self.row(r);
            cols.iter().zip(vals).map(move |(&c, &v)| (r, c, v))
        })
    }

    /// Verifies `H_ij == H_ji` exactly.
    pub fn check_hermitian(&self) -> Result<()> {
        for (r, c, v) in self.triplets() {
            let mirror = self.get(c, r);
            if mirror != v {
                return Err(Error::NotHermitian {
                    row: r,
                    col: c,
                    diff: (mirror - v).abs(),
                });
            }
        }
        Ok(())
    }

    pub fn is_hermitian(&self) -> bool {
        self.check_hermitian().is_ok()
    }

    /// `out = H x`.
    pub fn apply_into(&self, x: &[Complex64], out: &mut [Complex64]) {
        for (r, o) in out.iter_mut().enumerate() {
            let (cols, vals) = self.row(r);
            *o = cols
                .iter()
                .zip(vals)
                .map(|(&c, &v)| x[c] * v)
                .sum::<Complex64>();
        }
    }

    pub fn apply(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: x.len(),
            });
        }
        let mut out = vec![Complex64::new(0.0, 0.0); x.len()];
        self.apply_into(x, &mut out);
        Ok(out)
    }

    /// `<psi|H|psi>`.
    pub fn expectation(&self, state: &SectorState) -> Result<f64> {
        let h_psi = self.apply(state.amplitudes())?;
        Ok(state
            .amplitudes()
            .iter()
            .zip(&h_psi)
            .map(|(a, b)| (a.conj() * b).re)
            .sum())
    }

    /// Maximum absolute row sum; an upper bound on the spectral norm.
    pub fn norm_inf(&self) -> f64 {
        (0..self.dim())
            .map(|r| self.row(r).1.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> Mat<f64> {
        let mut m = Mat::zeros(self.dim(), self.dim());
        for (r, c, v) in self.triplets() {
            m[(r, c)] = v;
        }
        m
    }

    pub fn add(&self, other: &SectorOperator) -> Result<SectorOperator> {
        if self.basis != other.basis {
            return Err(Error::WrongSector("operators act on different bases".into()));
        }
        Self::from_triplets(self.basis.clone(), self.triplets().chain(other.triplets()))
    }

    /// `P H P^T` for the basis permutation `i -> perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<SectorOperator> {
        if perm.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: perm.len(),
            });
        }
        Self::from_triplets(
            self.basis.clone(),
            self.triplets().map(|(r, c, v)| (perm[r], perm[c], v)),
        )
    }

    /// Debug text dump: one JSON header line, then `row col value` lines.
    pub fn to_text(&self, params: Option<&ModelParams>) -> String {
        let geometry = self.basis.geometry();
        let header = serde_json::json!({
            "dimension": self.dim(),
            "sector": self.basis.sector(),
            "total_sites": geometry.total_sites(),
            "boundary": geometry.boundary(),
            "params": params,
        });
        let mut out = header.to_string();
        out.push('\n');
        for (r, c, v) in self.triplets() {
            let _ = writeln!(out, "{r} {c} {v}");
        }
        out
    }
}

#[derive(Clone, Copy)]
struct Terms {
    hopping: bool,
    potential: bool,
}

fn check_model(basis: &SectorBasis, params: &ModelParams) -> Result<()> {
    if basis.sector() == Sector::BoundPair {
        return Err(Error::WrongSector(
            "bound-pair basis needs the effective-model builder".into(),
        ));
    }
    if basis.geometry().boundary() == Boundary::Periodic && params.gradient() != 0.0 {
        return Err(Error::InvalidParams(
            "a gradient field is incompatible with periodic boundaries".into(),
        ));
    }
    Ok(())
}

fn assemble(basis: &Arc<SectorBasis>, params: &ModelParams, terms: Terms) -> Result<SectorOperator> {
    check_model(basis, params)?;
    let geometry = *basis.geometry();
    let hop = params.exchange() / 2.0;
    let mut triplets = Vec::new();
    for (i, config) in basis.configurations().iter().enumerate() {
        let occupied = config.offsets();
        if terms.potential {
            let bonds = match occupied {
                &[a, b] if geometry.are_adjacent(a, b) => 1.0,
                _ => 0.0,
            };
            let field: f64 = occupied.iter().map(|&o| geometry.label(o) as f64).sum();
            triplets.push((i, i, params.delta() * bonds + params.gradient() * field));
        }
        if terms.hopping {
            for (k, &site) in occupied.iter().enumerate() {
                for target in geometry.neighbors(site).into_iter().flatten() {
                    if occupied.contains(&target) {
                        continue;
                    }
                    let mut moved = [0usize; 2];
                    moved[..occupied.len()].copy_from_slice(occupied);
                    moved[k] = target;
                    let j = basis
                        .index_of_offsets(&moved[..occupied.len()])
                        .expect("hop stays inside the sector");
                    triplets.push((i, j, hop));
                }
            }
        }
    }
    SectorOperator::from_triplets(basis.clone(), triplets)
}

/// Full XXZ + gradient Hamiltonian restricted to a one- or two-magnon sector.
pub fn build_xxz_sector_hamiltonian(
    basis: &Arc<SectorBasis>,
    params: &ModelParams,
) -> Result<SectorOperator> {
    assemble(
        basis,
        params,
        Terms {
            hopping: true,
            potential: true,
        },
    )
}

/// Splits the Hamiltonian into its hopping part `H'` and its interaction plus
/// field part `H''`.
pub fn split_hamiltonian(
    basis: &Arc<SectorBasis>,
    params: &ModelParams,
) -> Result<(SectorOperator, SectorOperator)> {
    let hopping = assemble(
        basis,
        params,
        Terms {
            hopping: true,
            potential: false,
        },
    )?;
    let potential = assemble(
        basis,
        params,
        Terms {
            hopping: false,
            potential: true,
        },
    )?;
    Ok((hopping, potential))
}

/// Second-order effective Hamiltonian for tightly bound pairs `(m, m+1)`:
/// hopping `1/(4 Delta)` between neighbouring pairs and on-site energy `2 B m`.
pub fn build_effective_pair_hamiltonian(
    geometry: ChainGeometry,
    params: &ModelParams,
) -> Result<SectorOperator> {
    if params.delta() == 0.0 {
        return Err(Error::InvalidParams(
            "the bound-pair model requires Delta != 0".into(),
        ));
    }
    if geometry.boundary() == Boundary::Periodic && params.gradient() != 0.0 {
        return Err(Error::InvalidParams(
            "a gradient field is incompatible with periodic boundaries".into(),
        ));
    }
    let basis = Arc::new(SectorBasis::new(geometry, Sector::BoundPair));
    let dim = basis.dim();
    let hop = 1.0 / (4.0 * params.delta());
    let mut triplets = Vec::with_capacity(3 * dim);
    for m in 0..dim {
        let left_site = geometry.label(m) as f64;
        triplets.push((m, m, 2.0 * params.gradient() * left_site));
        let next = m + 1;
        let neighbor = if next < dim {
            Some(next)
        } else if geometry.boundary() == Boundary::Periodic && dim > 2 {
            Some(0)
        } else {
            None
        };
        if let Some(n) = neighbor {
            triplets.push((m, n, hop));
            triplets.push((n, m, hop));
        }
    }
    SectorOperator::from_triplets(basis, triplets)
}
