//! Experiment configuration: a TOML file with one section per concern,
//! completed from profile defaults and validated with line-precise messages.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context, Result};
use clap::ValueEnum;
use magnon_core::basis::{Boundary, ChainGeometry};
use serde::{Deserialize, Serialize};

/// Scale presets for keys the config file leaves out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    /// `L_t = 41`, `B = 0.1`, one Bloch period.
    #[default]
    Desk,
    /// `L_t = 101`, `B = 0.05`, four Bloch periods.
    Paper,
}

impl Profile {
    pub fn total_sites(self) -> usize {
        match self {
            Profile::Desk => 41,
            Profile::Paper => 101,
        }
    }

    pub fn gradient(self) -> f64 {
        match self {
            Profile::Desk => 0.1,
            Profile::Paper => 0.05,
        }
    }

    pub fn periods(self) -> usize {
        match self {
            Profile::Desk => 1,
            Profile::Paper => 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    #[default]
    Spectral,
    Krylov,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Relation {
    /// `(Delta, B)` against `(-Delta, B)` reflected about the initial centroid.
    #[default]
    Reflection,
    /// `(Delta, B)` against `(-Delta, -B)` without reflection.
    SignFlip,
}

/// What the configuration is loaded for; decides boundary and field defaults.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Workflow {
    Dynamics,
    Spectrum,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    chain: Option<RawChain>,
    model: Option<RawModel>,
    initial: Option<RawInitial>,
    time: Option<RawTime>,
    propagator: Option<RawPropagator>,
    observables: Option<RawObservables>,
    symmetry: Option<RawSymmetry>,
    output: Option<RawOutput>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawChain {
    total_sites: Option<usize>,
    boundary: Option<Boundary>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    delta: Option<f64>,
    gradient: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInitial {
    positions: Option<Vec<i64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTime {
    periods: Option<usize>,
    samples_per_period: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPropagator {
    method: Option<Method>,
    tol: Option<f64>,
    max_dim: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawObservables {
    spin_distribution: Option<bool>,
    correlations: Option<bool>,
    pair_correlations: Option<bool>,
    identity_check: Option<bool>,
    deviation_exponent: Option<f64>,
    snapshots: Option<Vec<f64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSymmetry {
    relation: Option<Relation>,
    trace: Option<[i64; 2]>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    directory: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObservableFlags {
    pub spin_distribution: bool,
    pub correlations: bool,
    pub pair_correlations: bool,
    /// Check the correlation identity at every sample and record the residual.
    pub identity_check: bool,
}

/// A fully resolved experiment definition.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub profile: Profile,
    pub total_sites: usize,
    pub boundary: Boundary,
    pub delta: f64,
    pub gradient: f64,
    pub initial_positions: Vec<i64>,
    pub periods: usize,
    pub samples_per_period: usize,
    pub propagator: Method,
    pub tol: f64,
    pub max_dim: usize,
    pub observables: ObservableFlags,
    pub deviation_exponent: f64,
    /// Correlation snapshot times in units of `T_B`.
    pub snapshots: Vec<f64>,
    pub relation: Relation,
    pub trace_sites: [i64; 2],
    pub output: Option<PathBuf>,
}

pub const DEFAULT_SNAPSHOTS: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

impl RunConfig {
    pub fn geometry(&self) -> ChainGeometry {
        ChainGeometry::with_total_sites(self.total_sites, self.boundary)
            .expect("validated at load time")
    }

    /// Loads `path`, filling absent keys from `profile`.
    pub fn load(path: &Path, profile: Profile, workflow: Workflow) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        Self::parse(&text, &path.display().to_string(), profile, workflow)
    }

    /// Parses config text; `origin` names the source in error messages.
    pub fn parse(text: &str, origin: &str, profile: Profile, workflow: Workflow) -> Result<Self> {
        let raw: RawConfig =
            toml::from_str(text).map_err(|e| anyhow!("{origin}: {}", e.to_string().trim_end()))?;
        let fail = |section: &str, key: &str, message: String| {
            let location = match key_line(text, section, key) {
                Some(line) => format!("{origin}:{line}"),
                None => origin.to_string(),
            };
            anyhow!("{location}: [{section}] {key}: {message}")
        };

        let chain = raw.chain.unwrap_or_default();
        let model = raw.model.unwrap_or_default();
        let initial = raw.initial.unwrap_or_default();
        let time = raw.time.unwrap_or_default();
        let propagator = raw.propagator.unwrap_or_default();
        let observables = raw.observables.unwrap_or_default();
        let symmetry = raw.symmetry.unwrap_or_default();

        let total_sites = chain.total_sites.unwrap_or(profile.total_sites());
        let default_boundary = match workflow {
            Workflow::Dynamics => Boundary::Open,
            Workflow::Spectrum => Boundary::Periodic,
        };
        let boundary = chain.boundary.unwrap_or(default_boundary);
        let geometry = ChainGeometry::with_total_sites(total_sites, boundary)
            .map_err(|e| fail("chain", "total_sites", e.to_string()))?;

        let delta = model
            .delta
            .ok_or_else(|| fail("model", "delta", "missing required key".into()))?;
        if !delta.is_finite() {
            return Err(fail("model", "delta", format!("must be finite (got {delta})")));
        }
        let gradient = match workflow {
            Workflow::Dynamics => model.gradient.unwrap_or(profile.gradient()),
            Workflow::Spectrum => model.gradient.unwrap_or(0.0),
        };
        if !gradient.is_finite() {
            return Err(fail("model", "gradient", format!("must be finite (got {gradient})")));
        }
        match workflow {
            Workflow::Dynamics => {
                if gradient == 0.0 {
                    return Err(fail(
                        "model",
                        "gradient",
                        "time is measured in Bloch periods, so the gradient must be non-zero".into(),
                    ));
                }
                if boundary == Boundary::Periodic {
                    return Err(fail(
                        "chain",
                        "boundary",
                        "a gradient field needs an open chain".into(),
                    ));
                }
            }
            Workflow::Spectrum => {
                if gradient != 0.0 {
                    return Err(fail(
                        "model",
                        "gradient",
                        "the momentum-resolved spectrum is defined without a field".into(),
                    ));
                }
                if boundary != Boundary::Periodic {
                    return Err(fail("chain", "boundary", "the spectrum needs a periodic chain".into()));
                }
            }
        }

        let initial_positions = initial
            .positions
            .ok_or_else(|| fail("initial", "positions", "missing required key".into()))?;
        if initial_positions.len() != 2 {
            return Err(fail(
                "initial",
                "positions",
                format!("need exactly two sites (got {})", initial_positions.len()),
            ));
        }
        if initial_positions[0] == initial_positions[1] {
            return Err(fail(
                "initial",
                "positions",
                "two magnons cannot share a site".into(),
            ));
        }
        if let Some(&p) = initial_positions.iter().find(|&&p| !geometry.contains(p)) {
            return Err(fail(
                "initial",
                "positions",
                format!(
                    "site {p} lies outside {}..={}",
                    geometry.min_site(),
                    geometry.max_site()
                ),
            ));
        }

        let periods = time.periods.unwrap_or(profile.periods());
        if periods == 0 {
            return Err(fail("time", "periods", "the time grid would be empty".into()));
        }
        let samples_per_period = time.samples_per_period.unwrap_or(256);
        if samples_per_period == 0 {
            return Err(fail(
                "time",
                "samples_per_period",
                "the time grid would be empty".into(),
            ));
        }

        let tol = propagator.tol.unwrap_or(1e-9);
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(fail("propagator", "tol", format!("must be positive (got {tol})")));
        }
        let max_dim = propagator.max_dim.unwrap_or(60);
        if max_dim == 0 {
            return Err(fail("propagator", "max_dim", "must be positive".into()));
        }

        let deviation_exponent = observables.deviation_exponent.unwrap_or(0.5);
        if !(deviation_exponent > 0.0 && deviation_exponent.is_finite()) {
            return Err(fail(
                "observables",
                "deviation_exponent",
                format!("must be positive (got {deviation_exponent})"),
            ));
        }
        let snapshots = observables.snapshots.unwrap_or_else(|| DEFAULT_SNAPSHOTS.to_vec());
        if let Some(&s) = snapshots
            .iter()
            .find(|&&s| !(s >= 0.0 && s <= periods as f64))
        {
            return Err(fail(
                "observables",
                "snapshots",
                format!("time {s} T_B lies outside the run [0, {periods}]"),
            ));
        }

        let trace_sites = symmetry.trace.unwrap_or([9, 10]);
        if let Some(&l) = trace_sites.iter().find(|&&l| !geometry.contains(l)) {
            return Err(fail("symmetry", "trace", format!("site {l} lies outside the chain")));
        }

        Ok(RunConfig {
            profile,
            total_sites,
            boundary,
            delta,
            gradient,
            initial_positions,
            periods,
            samples_per_period,
            propagator: propagator.method.unwrap_or_default(),
            tol,
            max_dim,
            observables: ObservableFlags {
                spin_distribution: observables.spin_distribution.unwrap_or(true),
                correlations: observables.correlations.unwrap_or(true),
                pair_correlations: observables.pair_correlations.unwrap_or(true),
                identity_check: observables.identity_check.unwrap_or(true),
            },
            deviation_exponent,
            snapshots,
            relation: symmetry.relation.unwrap_or_default(),
            trace_sites,
            output: raw.output.and_then(|o| o.directory),
        })
    }
}

/// 1-based line of `key` inside `[section]`, or of the section header when
/// the key is absent.
fn key_line(text: &str, section: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    let mut header = None;
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            current = name.trim().to_string();
            if current == section {
                header = Some(n + 1);
            }
            continue;
        }
        if current == section {
            if let Some((k, _)) = line.split_once('=') {
                if k.trim() == key {
                    return Some(n + 1);
                }
            }
        }
    }
    header
}
