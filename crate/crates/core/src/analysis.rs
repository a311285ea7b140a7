//! Frequency analysis of observable time series, gradient estimation, and
//! the interaction-sign symmetry check for correlation histories.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::ModelParams;
use crate::observables::CorrelationMatrix;

const MIN_SAMPLES: usize = 16;

/// A named, uniformly sampled observable trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeriesRecord {
    pub name: String,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl TimeSeriesRecord {
    pub fn new(name: impl Into<String>, times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::DimensionMismatch {
                expected: times.len(),
                actual: values.len(),
            });
        }
        Ok(Self {
            name: name.into(),
            times,
            values,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Drops the final sample, turning a closed window `[0, n T]` into the
    /// periodic window `[0, n T)`.
    pub fn without_closing_sample(&self) -> Self {
        let keep = self.len().saturating_sub(1);
        Self {
            name: self.name.clone(),
            times: self.times[..keep].to_vec(),
            values: self.values[..keep].to_vec(),
        }
    }

    /// Sampling step, after checking that the grid is uniform.
    pub fn uniform_step(&self) -> Result<f64> {
        if self.len() < 2 {
            return Err(Error::InvalidArgument("series needs at least two samples".into()));
        }
        let dt = (self.times[self.len() - 1] - self.times[0]) / (self.len() - 1) as f64;
        if !(dt > 0.0) {
            return Err(Error::NonUniformSampling(1));
        }
        for (k, pair) in self.times.windows(2).enumerate() {
            if ((pair[1] - pair[0]) - dt).abs() > 1e-6 * dt {
                return Err(Error::NonUniformSampling(k + 1));
            }
        }
        Ok(dt)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Window {
    #[default]
    None,
    Hann,
}

/// One-sided magnitude spectrum over angular frequencies `0..=pi/dt`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrequencySpectrum {
    pub omegas: Vec<f64>,
    pub magnitudes: Vec<f64>,
    /// Number of time samples that entered the transform.
    pub samples: usize,
}

impl FrequencySpectrum {
    /// Angular frequency spacing `2 pi / (N dt)`.
    pub fn bin_width(&self) -> f64 {
        self.omegas.get(1).copied().unwrap_or(0.0)
    }

    /// `sum_k |X_k|^2` over the full two-sided spectrum.
    pub fn total_power(&self) -> f64 {
        let last = self.magnitudes.len() - 1;
        let nyquist_unpaired = self.samples % 2 == 0;
        self.magnitudes
            .iter()
            .enumerate()
            .map(|(k, m)| {
                let weight = if k == 0 || (k == last && nyquist_unpaired) { 1.0 } else { 2.0 };
                weight * m * m
            })
            .sum()
    }
}

/// Magnitude spectrum of the mean-subtracted series, `|X_k| / sqrt(N)`.
pub fn dft_spectrum(series: &TimeSeriesRecord, window: Window) -> Result<FrequencySpectrum> {
    let n = series.len();
    if n < MIN_SAMPLES {
        return Err(Error::InvalidArgument(format!(
            "spectrum needs at least {MIN_SAMPLES} samples (got {n})"
        )));
    }
    let dt = series.uniform_step()?;
    let mean = series.values.iter().sum::<f64>() / n as f64;
    let mut buffer: Vec<Complex64> = series
        .values
        .iter()
        .enumerate()
        .map(|(k, v)| {
            let w = match window {
                Window::None => 1.0,
                Window::Hann => 0.5 * (1.0 - (2.0 * PI * k as f64 / n as f64).cos()),
            };
            Complex64::new((v - mean) * w, 0.0)
        })
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buffer);
    let scale = 1.0 / (n as f64).sqrt();
    let bins = n / 2 + 1;
    let step = 2.0 * PI / (n as f64 * dt);
    Ok(FrequencySpectrum {
        omegas: (0..bins).map(|k| k as f64 * step).collect(),
        magnitudes: buffer[..bins].iter().map(|x| x.norm() * scale).collect(),
        samples: n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Peak {
    /// Sub-bin angular frequency from a parabola through the three bins at the maximum.
    pub omega: f64,
    pub magnitude: f64,
    pub prominence: f64,
    pub bin: usize,
}

/// Peaks sorted by descending magnitude.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeakSet {
    pub peaks: Vec<Peak>,
    pub bin_width: f64,
}

impl PeakSet {
    pub fn top(&self) -> Option<&Peak> {
        self.peaks.first()
    }

    /// The highest peak within `bins` frequency bins of `omega`.
    pub fn near(&self, omega: f64, bins: f64) -> Option<&Peak> {
        self.peaks
            .iter()
            .find(|p| (p.omega - omega).abs() <= bins * self.bin_width)
    }
}

pub const DEFAULT_PROMINENCE_FRACTION: f64 = 0.05;

fn prominence(m: &[f64], k: usize) -> f64 {
    let height = m[k];
    let mut left_min = height;
    for &v in m[..k].iter().rev() {
        if v > height {
            break;
        }
        left_min = left_min.min(v);
    }
    let mut right_min = height;
    for &v in &m[k + 1..] {
        if v > height {
            break;
        }
        right_min = right_min.min(v);
    }
    height - left_min.max(right_min)
}

/// Strict local maxima whose prominence is at least
/// `min_prominence_fraction` of the global maximum.
pub fn find_peaks(spectrum: &FrequencySpectrum, min_prominence_fraction: f64) -> Result<PeakSet> {
    let m = &spectrum.magnitudes;
    if m.len() < 3 {
        return Err(Error::InvalidArgument("spectrum has fewer than three bins".into()));
    }
    if !(min_prominence_fraction > 0.0 && min_prominence_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "prominence fraction must lie in (0, 1) (got {min_prominence_fraction})"
        )));
    }
    let global = m.iter().copied().fold(0.0, f64::max);
    let threshold = min_prominence_fraction * global;
    let width = spectrum.bin_width();
    let mut peaks: Vec<Peak> = (1..m.len() - 1)
        .filter(|&k| m[k] > m[k - 1] && m[k] > m[k + 1])
        .filter_map(|k| {
            let prom = prominence(m, k);
            if prom < threshold || prom <= 0.0 {
                return None;
            }
            let (a, b, c) = (m[k - 1], m[k], m[k + 1]);
            let curvature = a - 2.0 * b + c;
            let shift = if curvature != 0.0 { 0.5 * (a - c) / curvature } else { 0.0 };
            Some(Peak {
                omega: spectrum.omegas[k] + shift * width,
                magnitude: b - 0.25 * (a - c) * shift,
                prominence: prom,
                bin: k,
            })
        })
        .collect();
    peaks.sort_by(|x, y| y.magnitude.total_cmp(&x.magnitude));
    Ok(PeakSet {
        peaks,
        bin_width: width,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GradientMode {
    /// The top peak sits at the single-magnon Bloch frequency `B`.
    Fundamental,
    /// The top peak sits at the bound-pair frequency `2B`.
    Doubled,
    /// Doubled if another peak sits near half the top frequency.
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GradientEstimate {
    pub value: f64,
    /// Half a frequency bin, scaled like the estimate.
    pub uncertainty: f64,
    pub mode: GradientMode,
}

/// Gradient from the dominant spectral peak; `omega_B = B` with `hbar = 1`.
pub fn estimate_gradient(peaks: &PeakSet, mode: GradientMode) -> Result<GradientEstimate> {
    let top = peaks.top().ok_or(Error::NoPeaks)?;
    let resolved = match mode {
        GradientMode::Auto => {
            let half = top.omega / 2.0;
            let has_subharmonic = peaks.peaks[1..]
                .iter()
                .any(|p| (p.omega - half).abs() <= 1.5 * peaks.bin_width);
            if has_subharmonic {
                GradientMode::Doubled
            } else {
                GradientMode::Fundamental
            }
        }
        other => other,
    };
    let divisor = if resolved == GradientMode::Doubled { 2.0 } else { 1.0 };
    Ok(GradientEstimate {
        value: top.omega / divisor,
        uncertainty: 0.5 * peaks.bin_width / divisor,
        mode: resolved,
    })
}

/// Longitudinal correlation matrices sampled along one run.
#[derive(Debug, Clone)]
pub struct CorrelationHistory {
    pub params: ModelParams,
    pub times: Vec<f64>,
    pub matrices: Vec<CorrelationMatrix>,
}

impl CorrelationHistory {
    /// `C_{l1,l2}(t)` along the run.
    pub fn trace(&self, l1: i64, l2: i64) -> Result<Vec<f64>> {
        self.matrices.iter().map(|c| c.at(l1, l2)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "relation", rename_all = "kebab-case")]
pub enum SymmetryRelation {
    /// `C(t)_(Delta,B)` at `(l', l'')` against `C(t)_(-Delta,B)` at `(2 l_c - l', 2 l_c - l'')`.
    CentroidReflection { centroid: f64 },
    /// `C(t)_(Delta,B)` against `C(t)_(-Delta,-B)` site by site.
    SignFlip,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SymmetryReport {
    pub relation: SymmetryRelation,
    pub params_a: ModelParams,
    pub params_b: ModelParams,
    pub max_deviation: f64,
    /// Sample index and site pair of the largest deviation.
    pub worst_sample: usize,
    pub worst_sites: (i64, i64),
    pub compared_pairs: usize,
    /// Site pairs per sample whose image falls off the chain.
    pub skipped_pairs: usize,
}

pub fn dynamical_symmetry_check(
    run_a: &CorrelationHistory,
    run_b: &CorrelationHistory,
    relation: SymmetryRelation,
) -> Result<SymmetryReport> {
    if run_a.times.len() != run_b.times.len() || run_a.matrices.len() != run_b.matrices.len() {
        return Err(Error::InvalidGrid("runs have different sample counts".into()));
    }
    if run_a.matrices.len() != run_a.times.len() {
        return Err(Error::DimensionMismatch {
            expected: run_a.times.len(),
            actual: run_a.matrices.len(),
        });
    }
    for (k, (ta, tb)) in run_a.times.iter().zip(&run_b.times).enumerate() {
        if (ta - tb).abs() > 1e-9 * ta.abs().max(1.0) {
            return Err(Error::InvalidGrid(format!("sample {k} times differ: {ta} vs {tb}")));
        }
    }
    let Some(first) = run_a.matrices.first() else {
        return Err(Error::InvalidGrid("runs have no samples".into()));
    };
    let geometry = *first.geometry();
    if run_b.matrices.iter().chain(&run_a.matrices).any(|c| *c.geometry() != geometry) {
        return Err(Error::InvalidGeometry("runs use different chains".into()));
    }
    let image: Vec<Option<usize>> = match relation {
        SymmetryRelation::SignFlip => (0..geometry.total_sites()).map(Some).collect(),
        SymmetryRelation::CentroidReflection { centroid } => {
            let doubled = 2.0 * centroid;
            if doubled.fract() != 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "reflection centroid must be a half-integer (got {centroid})"
                )));
            }
            geometry
                .sites()
                .map(|l| geometry.offset(doubled as i64 - l).ok())
                .collect()
        }
    };
    let n = geometry.total_sites();
    let mut report = SymmetryReport {
        relation,
        params_a: run_a.params,
        params_b: run_b.params,
        max_deviation: 0.0,
        worst_sample: 0,
        worst_sites: (geometry.label(0), geometry.label(0)),
        compared_pairs: 0,
        skipped_pairs: 0,
    };
    for i in 0..n {
        for j in 0..n {
            if image[i].is_some() && image[j].is_some() {
                report.compared_pairs += 1;
            } else {
                report.skipped_pairs += 1;
            }
        }
    }
    for (k, (ca, cb)) in run_a.matrices.iter().zip(&run_b.matrices).enumerate() {
        for i in 0..n {
            let Some(ri) = image[i] else { continue };
            for j in 0..n {
                let Some(rj) = image[j] else { continue };
                let deviation = (ca.get(i, j) - cb.get(ri, rj)).abs();
                if deviation > report.max_deviation {
                    report.max_deviation = deviation;
                    report.worst_sample = k;
                    report.worst_sites = (geometry.label(i), geometry.label(j));
                }
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sampled(f: impl Fn(f64) -> f64, dt: f64, n: usize) -> TimeSeriesRecord {
        let times: Vec<f64> = (0..n).map(|k| k as f64 * dt).collect();
        let values = times.iter().map(|&t| f(t)).collect();
        TimeSeriesRecord::new("x", times, values).unwrap()
    }

    #[test]
    fn cosine_peak_lands_on_its_bin() {
        let omega = 0.1;
        let period = 2.0 * PI / omega;
        let series = sampled(|t| (omega * t).cos(), 4.0 * period / 256.0, 256);
        let spectrum = dft_spectrum(&series, Window::None).unwrap();
        let peaks = find_peaks(&spectrum, DEFAULT_PROMINENCE_FRACTION).unwrap();
        assert_eq!(peaks.peaks.len(), 1);
        assert!((peaks.peaks[0].omega - omega).abs() <= spectrum.bin_width());
        let last = *spectrum.omegas.last().unwrap();
        assert!((last - PI / (4.0 * period / 256.0)).abs() < 1e-12);
    }

    #[test]
    fn constant_series_has_flat_zero_spectrum() {
        let series = sampled(|_| 3.5, 0.1, 64);
        let spectrum = dft_spectrum(&series, Window::None).unwrap();
        assert!(spectrum.magnitudes.iter().all(|&m| m < 1e-13));
    }

    #[test]
    fn rejects_short_and_irregular_series() {
        assert!(dft_spectrum(&sampled(|t| t, 0.1, 8), Window::None).is_err());
        let mut series = sampled(|t| t.sin(), 0.1, 32);
        series.times[10] += 0.03;
        assert!(matches!(
            dft_spectrum(&series, Window::None),
            Err(Error::NonUniformSampling(_))
        ));
        assert!(TimeSeriesRecord::new("x", vec![0.0], vec![]).is_err());
    }

    #[test]
    fn sub_bin_interpolation_improves_off_grid_frequency() {
        let omega = 0.1237;
        let dt = 0.5;
        let n = 512;
        let series = sampled(|t| (omega * t).sin(), dt, n);
        let spectrum = dft_spectrum(&series, Window::Hann).unwrap();
        let peaks = find_peaks(&spectrum, 0.05).unwrap();
        let top = peaks.top().unwrap();
        let raw = spectrum.omegas[top.bin];
        assert!((top.omega - omega).abs() < (raw - omega).abs());
        assert!((top.omega - omega).abs() < 0.1 * spectrum.bin_width());
    }

    #[test]
    fn gradient_modes() {
        let peaks = PeakSet {
            peaks: vec![Peak { omega: 0.2, magnitude: 1.0, prominence: 1.0, bin: 16 }],
            bin_width: 0.0125,
        };
        let doubled = estimate_gradient(&peaks, GradientMode::Doubled).unwrap();
        assert!((doubled.value - 0.1).abs() < 1e-15);
        assert!((doubled.uncertainty - 0.003125).abs() < 1e-15);
        let fundamental = estimate_gradient(&peaks, GradientMode::Fundamental).unwrap();
        assert_eq!(fundamental.value, 0.2);
        // No subharmonic peak: auto falls back to the fundamental reading.
        assert_eq!(estimate_gradient(&peaks, GradientMode::Auto).unwrap().mode, GradientMode::Fundamental);

        let with_sub = PeakSet {
            peaks: vec![
                Peak { omega: 0.2, magnitude: 1.0, prominence: 1.0, bin: 16 },
                Peak { omega: 0.101, magnitude: 0.3, prominence: 0.3, bin: 8 },
            ],
            bin_width: 0.0125,
        };
        let auto = estimate_gradient(&with_sub, GradientMode::Auto).unwrap();
        assert_eq!(auto.mode, GradientMode::Doubled);
        assert!((auto.value - 0.1).abs() < 1e-15);

        let empty = PeakSet { peaks: vec![], bin_width: 0.1 };
        assert_eq!(estimate_gradient(&empty, GradientMode::Auto), Err(Error::NoPeaks));
    }

    #[test]
    fn peak_finder_arguments() {
        let spectrum = FrequencySpectrum { omegas: vec![0.0, 1.0], magnitudes: vec![0.0, 1.0], samples: 2 };
        assert!(find_peaks(&spectrum, 0.05).is_err());
        let series = sampled(|t| t.sin(), 0.1, 64);
        let spectrum = dft_spectrum(&series, Window::None).unwrap();
        assert!(find_peaks(&spectrum, 0.0).is_err());
        assert!(find_peaks(&spectrum, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn parseval_holds(values in prop::collection::vec(-10.0f64..10.0, 16..200)) {
            let n = values.len();
            let times = (0..n).map(|k| k as f64 * 0.3).collect();
            let series = TimeSeriesRecord::new("x", times, values.clone()).unwrap();
            let spectrum = dft_spectrum(&series, Window::None).unwrap();
            let mean = values.iter().sum::<f64>() / n as f64;
            let variance_sum: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
            let power = spectrum.total_power();
            prop_assert!((power - variance_sum).abs() <= 1e-8 * variance_sum.max(1e-300));
        }

        #[test]
        fn peak_positions_are_scale_invariant(scale in 0.01f64..100.0, omega in 0.2f64..1.2) {
            let series = sampled(|t| (omega * t).cos() + 0.3 * (2.3 * omega * t).sin(), 0.25, 256);
            let scaled = TimeSeriesRecord::new(
                "y",
                series.times.clone(),
                series.values.iter().map(|v| v * scale).collect(),
            ).unwrap();
            let a = find_peaks(&dft_spectrum(&series, Window::None).unwrap(), 0.05).unwrap();
            let b = find_peaks(&dft_spectrum(&scaled, Window::None).unwrap(), 0.05).unwrap();
            prop_assert_eq!(a.peaks.len(), b.peaks.len());
            for (p, q) in a.peaks.iter().zip(&b.peaks) {
                prop_assert_eq!(p.bin, q.bin);
                prop_assert!((p.omega - q.omega).abs() < 1e-9);
            }
        }
    }
}
