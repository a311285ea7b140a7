//! The five workflows: evolve, spectrum, effective, symmetry and analyze.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use magnon_core::analysis::{
    dft_spectrum, dynamical_symmetry_check, estimate_gradient, find_peaks, CorrelationHistory,
    FrequencySpectrum, GradientEstimate, GradientMode, PeakSet, SymmetryRelation, TimeSeriesRecord,
    Window,
};
use magnon_core::basis::{make_initial_state, ChainGeometry, Sector, SectorBasis, SectorState};
use magnon_core::hamiltonian::{
    build_effective_pair_hamiltonian, build_xxz_sector_hamiltonian, ModelParams, SectorOperator,
};
use magnon_core::observables::{
    correlation_identity_residual, fidelity, generalized_deviation, longitudinal_correlation,
    spin_distribution, two_magnon_correlation, SiteMatrix,
};
use magnon_core::propagator::{
    bloch_period, diagonalize, evolve_krylov, evolve_spectral, KrylovOptions, TimeGrid,
};
use magnon_core::spectrum::{overlaps, two_magnon_spectrum};
use serde::Serialize;

use crate::config::{Method, Relation, RunConfig};
use crate::output::{fmt_value, OutputDir};
use crate::plot;

fn grid(config: &RunConfig) -> Result<TimeGrid> {
    Ok(TimeGrid::bloch_periods(
        config.gradient,
        config.periods,
        config.samples_per_period,
    )?)
}

fn params(delta: f64, gradient: f64) -> Result<ModelParams> {
    Ok(ModelParams::new(delta, gradient)?)
}

fn two_magnon_basis(geometry: ChainGeometry) -> Arc<SectorBasis> {
    Arc::new(SectorBasis::new(geometry, Sector::TwoMagnon))
}

fn propagate(
    config: &RunConfig,
    h: &SectorOperator,
    psi0: &SectorState,
    grid: &TimeGrid,
) -> Result<Vec<SectorState>> {
    Ok(match config.propagator {
        Method::Spectral => evolve_spectral(psi0, &diagonalize(h)?, grid)?,
        Method::Krylov => evolve_krylov(
            psi0,
            h,
            grid,
            &KrylovOptions {
                tol: config.tol,
                max_dim: config.max_dim,
            },
        )?,
    })
}

/// Closest grid sample to each snapshot time (in units of `T_B`).
fn snapshot_indices(config: &RunConfig, grid: &TimeGrid) -> Vec<(f64, usize)> {
    config
        .snapshots
        .iter()
        .map(|&s| {
            let k = (s * config.samples_per_period as f64).round() as usize;
            (s, k.min(grid.num_samples() - 1))
        })
        .collect()
}

fn site_header(first: &str, geometry: &ChainGeometry) -> Vec<String> {
    std::iter::once(first.to_string())
        .chain(geometry.sites().map(|l| l.to_string()))
        .collect()
}

fn matrix_rows(m: &SiteMatrix) -> Vec<Vec<String>> {
    let geometry = *m.geometry();
    (0..m.size())
        .map(|i| {
            std::iter::once(geometry.label(i).to_string())
                .chain(m.row(i).iter().map(|&v| fmt_value(v)))
                .collect()
        })
        .collect()
}

#[derive(Debug, Serialize)]
struct FrequencySummary {
    series: String,
    bin_width: f64,
    peaks: PeakSet,
    gradient: Option<GradientEstimate>,
}

/// Spectrum, peaks and gradient estimate of one stored series.
fn analyze_series(
    record: &TimeSeriesRecord,
    window: Window,
    mode: GradientMode,
    prominence: f64,
) -> Result<(FrequencySpectrum, FrequencySummary)> {
    let spectrum = dft_spectrum(record, window)?;
    let peaks = find_peaks(&spectrum, prominence)?;
    let gradient = estimate_gradient(&peaks, mode).ok();
    let summary = FrequencySummary {
        series: record.name.clone(),
        bin_width: spectrum.bin_width(),
        peaks,
        gradient,
    };
    Ok((spectrum, summary))
}

fn write_frequency_files(out: &mut OutputDir, stem: &str, spectrum: &FrequencySpectrum, summary: &FrequencySummary) -> Result<()> {
    out.write_csv(
        &format!("{stem}_spectrum.csv"),
        &["omega".into(), "magnitude".into()],
        spectrum
            .omegas
            .iter()
            .zip(&spectrum.magnitudes)
            .map(|(w, m)| vec![fmt_value(*w), fmt_value(*m)]),
    )?;
    out.write_csv(
        &format!("{stem}_peaks.csv"),
        &["omega_peak".into(), "magnitude".into(), "prominence".into()],
        summary.peaks.peaks.iter().map(|p| {
            vec![
                fmt_value(p.omega),
                fmt_value(p.magnitude),
                fmt_value(p.prominence),
            ]
        }),
    )
}

#[derive(Debug, Serialize)]
struct EvolveResults {
    dimension: usize,
    bloch_period: f64,
    samples: usize,
    energy: f64,
    max_norm_drift: f64,
    max_energy_drift: f64,
    /// Largest violation of `C = Gamma - S'/2 - S''/2 - 1/4` over all samples.
    max_identity_residual: Option<f64>,
    snapshots: Vec<Snapshot>,
    frequency: Vec<FrequencySummary>,
}

#[derive(Debug, Serialize)]
struct Snapshot {
    requested: f64,
    sample: usize,
    t_over_tb: f64,
}

pub fn run_evolve(config: &RunConfig, out_dir: &Path, window: Window) -> Result<PathBuf> {
    let geometry = config.geometry();
    let basis = two_magnon_basis(geometry);
    let h = build_xxz_sector_hamiltonian(&basis, &params(config.delta, config.gradient)?)?;
    let psi0 = make_initial_state(&basis, &config.initial_positions)?;
    let grid = grid(config)?;
    let states = propagate(config, &h, &psi0, &grid)?;
    let tb = bloch_period(config.gradient);
    let times = grid.times();
    let mut out = OutputDir::create(out_dir)?;

    let energy = h.expectation(&psi0)?;
    let mut max_norm_drift: f64 = 0.0;
    let mut max_energy_drift: f64 = 0.0;
    let mut identity: Option<f64> = config.observables.identity_check.then_some(0.0);
    let mut series_rows = Vec::with_capacity(states.len());
    let mut distribution_rows = Vec::new();
    let (mut fidelities, mut deviations) = (Vec::new(), Vec::new());
    for (t, psi) in times.iter().zip(&states) {
        max_norm_drift = max_norm_drift.max((psi.norm() - 1.0).abs());
        max_energy_drift = max_energy_drift.max((h.expectation(psi)? - energy).abs());
        let spins = spin_distribution(psi);
        let f = fidelity(psi, &psi0)?;
        let d = generalized_deviation(&spins, config.deviation_exponent)?;
        fidelities.push(f);
        deviations.push(d.deviation);
        series_rows.push(vec![
            fmt_value(t / tb),
            fmt_value(*t),
            fmt_value(f),
            fmt_value(d.centroid),
            fmt_value(d.deviation),
        ]);
        if config.observables.spin_distribution {
            distribution_rows.push(
                std::iter::once(fmt_value(t / tb))
                    .chain(spins.values().iter().map(|&v| fmt_value(v)))
                    .collect(),
            );
        }
        if let Some(worst) = identity.as_mut() {
            let c = longitudinal_correlation(psi)?;
            let gamma = two_magnon_correlation(psi)?;
            let (off, diag) = correlation_identity_residual(&c, &gamma, &spins);
            *worst = worst.max(off).max(diag);
        }
    }
    out.write_csv(
        "series.csv",
        &["t_over_tb", "t", "fidelity", "centroid", "deviation"].map(String::from),
        series_rows,
    )?;
    if config.observables.spin_distribution {
        out.write_csv(
            "spin_distribution.csv",
            &site_header("t_over_tb", &geometry),
            distribution_rows,
        )?;
    }

    let mut snapshots = Vec::new();
    let mut snapshot_files = Vec::new();
    for (requested, k) in snapshot_indices(config, &grid) {
        let label = format!("{:.4}", times[k] / tb);
        if config.observables.correlations {
            let name = format!("correlation_t{label}.csv");
            let c = longitudinal_correlation(&states[k])?;
            out.write_csv(&name, &site_header("l", &geometry), matrix_rows(&c))?;
            snapshot_files.push(name);
        }
        if config.observables.pair_correlations {
            let name = format!("pair_correlation_t{label}.csv");
            let gamma = two_magnon_correlation(&states[k])?;
            out.write_csv(&name, &site_header("l", &geometry), matrix_rows(&gamma))?;
            snapshot_files.push(name);
        }
        snapshots.push(Snapshot {
            requested,
            sample: k,
            t_over_tb: times[k] / tb,
        });
    }

    // Frequency content over the periodic window [0, n T_B).
    let mut frequency = Vec::new();
    if grid.num_samples() > 16 {
        for (name, values) in [("fidelity", fidelities), ("deviation", deviations)] {
            let record = TimeSeriesRecord::new(name, times.clone(), values)?.without_closing_sample();
            let (spectrum, summary) = analyze_series(&record, window, GradientMode::Auto, 0.05)?;
            write_frequency_files(&mut out, name, &spectrum, &summary)?;
            frequency.push(summary);
        }
    }

    out.write("plot.py", &plot::evolve_script(&snapshot_files))?;
    let results = EvolveResults {
        dimension: basis.dim(),
        bloch_period: tb,
        samples: states.len(),
        energy,
        max_norm_drift,
        max_energy_drift,
        max_identity_residual: identity,
        snapshots,
        frequency,
    };
    out.finish("evolve", config, &results)
}

#[derive(Debug, Serialize)]
struct SpectrumResults {
    dimension: usize,
    bound_tolerance: f64,
    bound_states: usize,
    bound_fraction: Option<f64>,
    overlap_sum: f64,
}

pub fn run_spectrum(config: &RunConfig, out_dir: &Path) -> Result<PathBuf> {
    let geometry = config.geometry();
    let result = two_magnon_spectrum(geometry, config.delta)?;
    let psi0 = make_initial_state(result.basis(), &config.initial_positions)?;
    let result = overlaps(result, &psi0)?;
    let mut out = OutputDir::create(out_dir)?;
    out.write_csv(
        "spectrum.csv",
        &["alpha", "K", "E", "bound", "P"].map(String::from),
        result.entries().iter().map(|e| {
            vec![
                e.sector.alpha.to_string(),
                fmt_value(e.momentum()),
                fmt_value(e.energy),
                u8::from(e.bound).to_string(),
                fmt_value(e.overlap),
            ]
        }),
    )?;
    out.write("plot.py", &plot::spectrum_script())?;
    let results = SpectrumResults {
        dimension: result.basis().dim(),
        bound_tolerance: result.tolerance(),
        bound_states: result.entries().iter().filter(|e| e.bound).count(),
        bound_fraction: result.bound_fraction(),
        overlap_sum: result.entries().iter().map(|e| e.overlap).sum(),
    };
    out.finish("spectrum", config, &results)
}

#[derive(Debug, Serialize)]
struct EffectiveResults {
    effective_hopping: f64,
    max_centroid_gap_first_period: f64,
    max_centroid_gap: f64,
    max_deviation_gap: f64,
}

pub fn run_effective(config: &RunConfig, out_dir: &Path) -> Result<PathBuf> {
    let geometry = config.geometry();
    let model = params(config.delta, config.gradient)?;
    let grid = grid(config)?;
    let tb = bloch_period(config.gradient);

    let basis = two_magnon_basis(geometry);
    let h = build_xxz_sector_hamiltonian(&basis, &model)?;
    let psi0 = make_initial_state(&basis, &config.initial_positions)?;
    let full = propagate(config, &h, &psi0, &grid)?;

    let h_eff = build_effective_pair_hamiltonian(geometry, &model)?;
    let pair0 = make_initial_state(h_eff.basis(), &config.initial_positions)
        .context("the effective model starts from an adjacent pair")?;
    let effective = propagate(config, &h_eff, &pair0, &grid)?;

    let mut rows = Vec::new();
    let mut results = EffectiveResults {
        effective_hopping: 1.0 / (4.0 * config.delta),
        max_centroid_gap_first_period: 0.0,
        max_centroid_gap: 0.0,
        max_deviation_gap: 0.0,
    };
    for (k, (t, (a, b))) in grid.times().iter().zip(full.iter().zip(&effective)).enumerate() {
        let da = generalized_deviation(&spin_distribution(a), config.deviation_exponent)?;
        let db = generalized_deviation(&spin_distribution(b), config.deviation_exponent)?;
        let gap = (da.centroid - db.centroid).abs();
        results.max_centroid_gap = results.max_centroid_gap.max(gap);
        if k <= config.samples_per_period {
            results.max_centroid_gap_first_period = results.max_centroid_gap_first_period.max(gap);
        }
        results.max_deviation_gap = results.max_deviation_gap.max((da.deviation - db.deviation).abs());
        rows.push(
            [t / tb, *t, da.centroid, db.centroid, da.deviation, db.deviation]
                .map(fmt_value)
                .to_vec(),
        );
    }
    let mut out = OutputDir::create(out_dir)?;
    out.write_csv(
        "effective.csv",
        &[
            "t_over_tb",
            "t",
            "centroid_full",
            "centroid_eff",
            "deviation_full",
            "deviation_eff",
        ]
        .map(String::from),
        rows,
    )?;
    out.write("plot.py", &plot::effective_script())?;
    out.finish("effective", config, &results)
}

#[derive(Debug, Serialize)]
struct SymmetryResults {
    report: magnon_core::analysis::SymmetryReport,
    trace_sites: [i64; 2],
    image_sites: [i64; 2],
    max_trace_deviation: f64,
}

pub fn run_symmetry(config: &RunConfig, out_dir: &Path) -> Result<PathBuf> {
    let geometry = config.geometry();
    let basis = two_magnon_basis(geometry);
    let grid = grid(config)?;
    let tb = bloch_period(config.gradient);
    let positions = &config.initial_positions;
    let centroid = positions.iter().sum::<i64>() as f64 / positions.len() as f64;
    let (relation, partner_gradient, partner_positions, image) = match config.relation {
        Relation::Reflection => {
            let mirror = |l: i64| positions.iter().sum::<i64>() - l;
            (
                SymmetryRelation::CentroidReflection { centroid },
                config.gradient,
                positions.iter().map(|&l| mirror(l)).collect::<Vec<_>>(),
                config.trace_sites.map(mirror),
            )
        }
        Relation::SignFlip => (
            SymmetryRelation::SignFlip,
            -config.gradient,
            positions.clone(),
            config.trace_sites,
        ),
    };
    if let Some(&l) = image.iter().find(|&&l| !geometry.contains(l)) {
        bail!("the image site {l} of the traced pair lies outside the chain");
    }

    let run = |delta: f64, gradient: f64, positions: &[i64]| -> Result<CorrelationHistory> {
        let model = params(delta, gradient)?;
        let h = build_xxz_sector_hamiltonian(&basis, &model)?;
        let psi0 = make_initial_state(&basis, positions)?;
        let states = propagate(config, &h, &psi0, &grid)?;
        let matrices = states
            .iter()
            .map(longitudinal_correlation)
            .collect::<magnon_core::Result<Vec<_>>>()?;
        Ok(CorrelationHistory {
            params: model,
            times: grid.times(),
            matrices,
        })
    };
    let a = run(config.delta, config.gradient, positions)?;
    let b = run(-config.delta, partner_gradient, &partner_positions)?;
    let report = dynamical_symmetry_check(&a, &b, relation)?;

    let [l1, l2] = config.trace_sites;
    let [m1, m2] = image;
    let trace_a = a.trace(l1, l2)?;
    let trace_b = b.trace(m1, m2)?;
    let max_trace_deviation = trace_a
        .iter()
        .zip(&trace_b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    let mut out = OutputDir::create(out_dir)?;
    out.write_csv(
        "symmetry_trace.csv",
        &[
            "t_over_tb".to_string(),
            "t".to_string(),
            format!("C_{l1}_{l2}"),
            format!("C_{m1}_{m2}_partner"),
        ],
        grid.times()
            .iter()
            .zip(trace_a.iter().zip(&trace_b))
            .map(|(t, (x, y))| [t / tb, *t, *x, *y].map(fmt_value).to_vec()),
    )?;
    let results = SymmetryResults {
        report,
        trace_sites: config.trace_sites,
        image_sites: image,
        max_trace_deviation,
    };
    out.write_json("symmetry.json", &results)?;
    out.write("plot.py", &plot::symmetry_script())?;
    out.finish("symmetry", config, &results)
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalyzeOptions {
    pub input: PathBuf,
    pub column: String,
    pub window: Window,
    pub mode: GradientMode,
    pub prominence: f64,
}

/// Reads `time_column` and `column` from a CSV with a header row.
fn read_columns(path: &Path, time_column: &[&str], column: &str) -> Result<(String, Vec<f64>, Vec<f64>, Option<f64>)> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<&str> = lines
        .next()
        .ok_or_else(|| anyhow!("{}: empty file", path.display()))?
        .split(',')
        .map(str::trim)
        .collect();
    let find = |name: &str| header.iter().position(|h| *h == name);
    let (time_name, time_idx) = time_column
        .iter()
        .find_map(|n| find(n).map(|i| (n.to_string(), i)))
        .ok_or_else(|| anyhow!("{}: no time column ({})", path.display(), time_column.join(" or ")))?;
    let value_idx = find(column).ok_or_else(|| {
        anyhow!(
            "{}: no column {column:?} (available: {})",
            path.display(),
            header.join(", ")
        )
    })?;
    let periods_idx = find("t_over_tb");
    let (mut times, mut values) = (Vec::new(), Vec::new());
    let mut last_period = None;
    for (n, line) in lines.enumerate() {
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        let cell = |i: usize| -> Result<f64> {
            cells
                .get(i)
                .ok_or_else(|| anyhow!("{}:{}: missing column {}", path.display(), n + 2, i + 1))?
                .parse()
                .with_context(|| format!("{}:{}: not a number", path.display(), n + 2))
        };
        times.push(cell(time_idx)?);
        values.push(cell(value_idx)?);
        if let Some(i) = periods_idx {
            last_period = Some(cell(i)?);
        }
    }
    Ok((time_name, times, values, last_period))
}

pub fn run_analyze(options: &AnalyzeOptions, out_dir: &Path) -> Result<PathBuf> {
    let (time_name, times, values, last_period) = read_columns(&options.input, &["t", "t_over_tb"], &options.column)?;
    let mut record = TimeSeriesRecord::new(options.column.clone(), times, values)?;
    // A closed window [0, n T_B] repeats its first sample; drop the repeat.
    let closed = last_period.is_some_and(|p| p >= 1.0 && (p - p.round()).abs() < 1e-9);
    if closed {
        record = record.without_closing_sample();
    }
    let (spectrum, summary) = analyze_series(&record, options.window, options.mode, options.prominence)?;
    let mut out = OutputDir::create(out_dir)?;
    let stem = options.column.as_str();
    write_frequency_files(&mut out, stem, &spectrum, &summary)?;
    out.write_json(&format!("{stem}_gradient.json"), &summary.gradient)?;
    out.write(
        "plot.py",
        &plot::analyze_script(&format!("{stem}_spectrum.csv"), &format!("{stem}_peaks.csv")),
    )?;
    #[derive(Serialize)]
    struct AnalyzeResults<'a> {
        time_column: String,
        samples: usize,
        dropped_closing_sample: bool,
        frequency: &'a FrequencySummary,
    }
    let results = AnalyzeResults {
        time_column: time_name,
        samples: record.len(),
        dropped_closing_sample: closed,
        frequency: &summary,
    };
    out.finish("analyze", options, &results)
}
