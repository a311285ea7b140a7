//! Time evolution inside a magnon sector.
//!
//! Two independent propagators are provided: exact spectral propagation from
//! a full eigendecomposition, and adaptive Lanczos (Krylov) stepping that only
//! needs matrix-vector products.

use std::f64::consts::PI;
use std::sync::Arc;

use faer::{Mat, Side};
use num_complex::Complex64;

use crate::basis::{SectorBasis, SectorState};
use crate::error::{Error, Result};
use crate::hamiltonian::SectorOperator;

/// Bloch period `2 pi / |B|`.
pub fn bloch_period(gradient: f64) -> f64 {
    2.0 * PI / gradient.abs()
}

/// Uniform sampling `t_k = k dt`, `k = 0..num_samples`, with `dt = t_max / (num_samples - 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    t_max: f64,
    num_samples: usize,
}

impl TimeGrid {
    pub fn new(t_max: f64, num_samples: usize) -> Result<Self> {
        if num_samples < 2 {
            return Err(Error::InvalidGrid(format!(
                "need at least two samples (got {num_samples})"
            )));
        }
        if !(t_max.is_finite() && t_max > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "t_max must be positive (got {t_max})"
            )));
        }
        Ok(Self { t_max, num_samples })
    }

    /// `periods` Bloch periods with `samples_per_period` steps each; the
    /// closing sample at `periods * T_B` is included.
    pub fn bloch_periods(gradient: f64, periods: usize, samples_per_period: usize) -> Result<Self> {
        if gradient == 0.0 || !gradient.is_finite() {
            return Err(Error::InvalidGrid(
                "Bloch-period time units need a non-zero gradient".into(),
            ));
        }
        if periods == 0 || samples_per_period == 0 {
            return Err(Error::InvalidGrid(
                "periods and samples per period must be positive".into(),
            ));
        }
        Self::new(
            periods as f64 * bloch_period(gradient),
            periods * samples_per_period + 1,
        )
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn num_samples(&self) -> usize {
        self.num_samples
    }

    pub fn dt(&self) -> f64 {
        self.t_max / (self.num_samples - 1) as f64
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt()
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.num_samples).map(|k| self.time(k)).collect()
    }
}

/// Eigenpairs of a real symmetric sector operator, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    basis: Arc<SectorBasis>,
    values: Vec<f64>,
    vectors: Mat<f64>,
}

impl EigenDecomposition {
    pub fn basis(&self) -> &Arc<SectorBasis> {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Eigenvectors as columns.
    pub fn vectors(&self) -> &Mat<f64> {
        &self.vectors
    }

    /// Largest `||H v - E v||` over all pairs.
    pub fn max_residual(&self, h: &SectorOperator) -> f64 {
        let n = self.dim();
        let mut v = vec![Complex64::new(0.0, 0.0); n];
        let mut hv = vec![Complex64::new(0.0, 0.0); n];
        let mut worst: f64 = 0.0;
        for k in 0..n {
            for (i, x) in v.iter_mut().enumerate() {
                *x = Complex64::new(self.vectors[(i, k)], 0.0);
            }
            h.apply_into(&v, &mut hv);
            let r: f64 = hv
                .iter()
                .zip(&v)
                .map(|(a, b)| (a - b * self.values[k]).norm_sqr())
                .sum();
            worst = worst.max(r.sqrt());
        }
        worst
    }

    /// Largest entry of `|V^T V - I|`.
    pub fn orthonormality_error(&self) -> f64 {
        let gram = self.vectors.transpose() * &self.vectors;
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for j in 0..n {
            for i in 0..n {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((gram[(i, j)] - target).abs());
            }
        }
        worst
    }

    /// Expansion coefficients `V^T psi`, split into real and imaginary parts.
    fn coefficients(&self, state: &SectorState) -> (Mat<f64>, Mat<f64>) {
        let n = self.dim();
        let re = Mat::from_fn(n, 1, |i, _| state.amplitudes()[i].re);
        let im = Mat::from_fn(n, 1, |i, _| state.amplitudes()[i].im);
        (self.vectors.transpose() * &re, self.vectors.transpose() * &im)
    }

    fn check_state(&self, state: &SectorState) -> Result<()> {
        if state.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: state.dim(),
            });
        }
        Ok(())
    }

    /// `psi(t) = V exp(-i E t) V^T psi(0)` for a single time.
    pub fn evolve_to(&self, state: &SectorState, t: f64) -> Result<SectorState> {
        self.check_state(state)?;
        let (re, im) = self.coefficients(state);
        Ok(self.propagate_batch(state, &re, &im, &[t]).remove(0))
    }

    fn propagate_batch(
        &self,
        state: &SectorState,
        c_re: &Mat<f64>,
        c_im: &Mat<f64>,
        times: &[f64],
    ) -> Vec<SectorState> {
        let n = self.dim();
        let cols = times.len();
        let mut phased_re = Mat::<f64>::zeros(n, cols);
        let mut phased_im = Mat::<f64>::zeros(n, cols);
        for (j, &t) in times.iter().enumerate() {
            for k in 0..n {
                let (s, c) = (-self.values[k] * t).sin_cos();
                let (a, b) = (c_re[(k, 0)], c_im[(k, 0)]);
                phased_re[(k, j)] = a * c - b * s;
                phased_im[(k, j)] = a * s + b * c;
            }
        }
        let out_re = &self.vectors * &phased_re;
        let out_im = &self.vectors * &phased_im;
        times
            .iter()
            .enumerate()
            .map(|(j, &t)| {
                if t == 0.0 {
                    return state.clone();
                }
                let amplitudes = (0..n)
                    .map(|i| Complex64::new(out_re[(i, j)], out_im[(i, j)]))
                    .collect();
                SectorState::from_evolved(state.basis().clone(), amplitudes)
            })
            .collect()
    }
}

/// Dense eigendecomposition of a real symmetric sector operator.
pub fn diagonalize(h: &SectorOperator) -> Result<EigenDecomposition> {
    h.check_hermitian()?;
    let evd = h
        .to_dense()
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Eigen(format!("{e:?}")))?;
    let values = evd.S().column_vector().iter().copied().collect();
    Ok(EigenDecomposition {
        basis: h.basis().clone(),
        values,
        vectors: evd.U().to_owned(),
    })
}

const SPECTRAL_BATCH: usize = 128;

/// Exact propagation of `state` to every grid time.
pub fn evolve_spectral(
    state: &SectorState,
    eig: &EigenDecomposition,
    grid: &TimeGrid,
) -> Result<Vec<SectorState>> {
    eig.check_state(state)?;
    let (re, im) = eig.coefficients(state);
    let times = grid.times();
    let mut out = Vec::with_capacity(times.len());
    for chunk in times.chunks(SPECTRAL_BATCH) {
        out.extend(eig.propagate_batch(state, &re, &im, chunk));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KrylovOptions {
    /// Bound on the accumulated error over the whole grid; each step is held
    /// to `tol / steps`.
    pub tol: f64,
    pub max_dim: usize,
}

impl KrylovOptions {
    pub fn new(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }
}

impl Default for KrylovOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_dim: 60,
        }
    }
}

/// Diagnostics of one Lanczos step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KrylovStep {
    pub dimension: usize,
    pub error_estimate: f64,
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// `exp(-i T dt) e_1` for the symmetric tridiagonal `T` given by its diagonal
/// and off-diagonal.
fn tridiagonal_propagator(alpha: &[f64], beta: &[f64], dt: f64) -> Result<Vec<Complex64>> {
    let m = alpha.len();
    let t = Mat::from_fn(m, m, |i, j| {
        if i == j {
            alpha[i]
        } else if i + 1 == j {
            beta[i]
        } else if j + 1 == i {
            beta[j]
        } else {
            0.0
        }
    });
    let evd = t
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Eigen(format!("{e:?}")))?;
    let (u, s) = (evd.U(), evd.S().column_vector());
    Ok((0..m)
        .map(|i| {
            (0..m)
                .map(|k| {
                    let phase = Complex64::from_polar(1.0, -s[k] * dt);
                    phase * (u[(i, k)] * u[(0, k)])
                })
                .sum()
        })
        .collect())
}

/// One adaptive Lanczos step `psi -> exp(-i H dt) psi`, growing the subspace
/// until the error estimate drops below `local_tol`.
pub fn krylov_step(
    h: &SectorOperator,
    psi: &[Complex64],
    dt: f64,
    local_tol: f64,
    max_dim: usize,
) -> std::result::Result<(Vec<Complex64>, KrylovStep), KrylovStep> {
    let n = psi.len();
    let beta0 = norm(psi);
    let zero = Complex64::new(0.0, 0.0);
    if beta0 == 0.0 {
        return Ok((
            psi.to_vec(),
            KrylovStep {
                dimension: 0,
                error_estimate: 0.0,
            },
        ));
    }
    let scale = h.norm_inf().max(f64::MIN_POSITIVE);
    let mut basis: Vec<Vec<Complex64>> = vec![psi.iter().map(|x| x / beta0).collect()];
    let mut alpha = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut w = vec![zero; n];
    let mut last_estimate = f64::INFINITY;
    loop {
        let j = basis.len() - 1;
        h.apply_into(&basis[j], &mut w);
        let a = dot(&basis[j], &w).re;
        alpha.push(a);
        for (wi, vi) in w.iter_mut().zip(&basis[j]) {
            *wi -= vi * a;
        }
        if j > 0 {
            let b = beta[j - 1];
            for (wi, vi) in w.iter_mut().zip(&basis[j - 1]) {
                *wi -= vi * b;
            }
        }
        // Full reorthogonalization against the whole Krylov basis.
        for v in &basis {
            let overlap = dot(v, &w);
            for (wi, vi) in w.iter_mut().zip(v) {
                *wi -= vi * overlap;
            }
        }
        let next_beta = norm(&w);
        let y = tridiagonal_propagator(&alpha, &beta, dt).map_err(|_| KrylovStep {
            dimension: alpha.len(),
            error_estimate: last_estimate,
        })?;
        let breakdown = next_beta <= 1e-14 * scale;
        let estimate = if breakdown {
            0.0
        } else {
            beta0 * next_beta * y[alpha.len() - 1].norm()
        };
        last_estimate = estimate;
        if breakdown || estimate <= local_tol {
            let mut out = vec![zero; n];
            for (v, c) in basis.iter().zip(&y) {
                let c = c * beta0;
                for (o, vi) in out.iter_mut().zip(v) {
                    *o += vi * c;
                }
            }
            return Ok((
                out,
                KrylovStep {
                    dimension: alpha.len(),
                    error_estimate: estimate,
                },
            ));
        }
        if basis.len() >= max_dim {
            return Err(KrylovStep {
                dimension: basis.len(),
                error_estimate: estimate,
            });
        }
        beta.push(next_beta);
        basis.push(w.iter().map(|x| x / next_beta).collect());
    }
}

/// Adaptive Lanczos propagation of `state` across the grid.
pub fn evolve_krylov(
    state: &SectorState,
    h: &SectorOperator,
    grid: &TimeGrid,
    options: &KrylovOptions,
) -> Result<Vec<SectorState>> {
    if state.dim() != h.dim() {
        return Err(Error::DimensionMismatch {
            expected: h.dim(),
            actual: state.dim(),
        });
    }
    if !(options.tol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "Krylov tolerance must be positive (got {})",
            options.tol
        )));
    }
    if options.max_dim == 0 {
        return Err(Error::InvalidArgument(
            "Krylov subspace dimension must be positive".into(),
        ));
    }
    let steps = grid.num_samples() - 1;
    let local_tol = options.tol / steps as f64;
    let dt = grid.dt();
    let mut out = Vec::with_capacity(grid.num_samples());
    out.push(state.clone());
    let mut psi = state.amplitudes().to_vec();
    for step in 1..=steps {
        let (next, _) = krylov_step(h, &psi, dt, local_tol, options.max_dim).map_err(|info| {
            Error::KrylovNotConverged {
                step,
                time: grid.time(step),
                estimate: info.error_estimate,
                dimension: info.dimension,
            }
        })?;
        psi = next;
        out.push(SectorState::from_evolved(state.basis().clone(), psi.clone()));
    }
    Ok(out)
}
