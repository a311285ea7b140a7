//! Command-line front end for two-magnon Bloch-oscillation experiments.

pub mod commands;
pub mod config;
pub mod output;
mod plot;

use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use magnon_core::analysis::{GradientMode, Window};

use crate::commands::AnalyzeOptions;
use crate::config::{Method, Profile, RunConfig, Workflow};

#[derive(Debug, Parser)]
#[command(name = "magnon", version, about = "Two-magnon Bloch oscillations in the XXZ chain")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evolve an initial pair and write distributions, series and correlation snapshots.
    Evolve(RunArgs),
    /// Momentum-resolved spectrum of the field-free ring with initial-state overlaps.
    Spectrum(RunArgs),
    /// Compare the full two-magnon dynamics with the effective bound-pair model.
    Effective(RunArgs),
    /// Run the paired simulations of the interaction-sign symmetry and compare correlations.
    Symmetry(RunArgs),
    /// Frequency spectrum, peaks and gradient estimate of a stored series.
    Analyze(AnalyzeArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Experiment definition (TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; overrides `[output] directory`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Defaults for keys the config leaves out.
    #[arg(long, value_enum, default_value_t = Profile::Desk)]
    pub profile: Profile,
    /// Overrides `[propagator] method`.
    #[arg(long, value_enum)]
    pub propagator: Option<Method>,
    /// Window applied before the Fourier transform of the emitted series.
    #[arg(long, value_enum, default_value_t = WindowArg::None)]
    pub window: WindowArg,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// CSV with a header row and a `t` (or `t_over_tb`) column.
    #[arg(long)]
    pub input: PathBuf,
    /// Column to analyze.
    #[arg(long, default_value = "deviation")]
    pub column: String,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = WindowArg::None)]
    pub window: WindowArg,
    #[arg(long, value_enum, default_value_t = ModeArg::Auto)]
    pub mode: ModeArg,
    /// Minimum peak prominence as a fraction of the spectral maximum.
    #[arg(long, default_value_t = 0.05)]
    pub prominence: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum WindowArg {
    None,
    Hann,
}

impl From<WindowArg> for Window {
    fn from(w: WindowArg) -> Self {
        match w {
            WindowArg::None => Window::None,
            WindowArg::Hann => Window::Hann,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Fundamental,
    Doubled,
    Auto,
}

impl From<ModeArg> for GradientMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Fundamental => GradientMode::Fundamental,
            ModeArg::Doubled => GradientMode::Doubled,
            ModeArg::Auto => GradientMode::Auto,
        }
    }
}

fn load(args: &RunArgs, workflow: Workflow) -> Result<(RunConfig, PathBuf)> {
    let mut config = RunConfig::load(&args.config, args.profile, workflow)?;
    if let Some(method) = args.propagator {
        config.propagator = method;
    }
    let Some(out) = args.out.clone().or_else(|| config.output.clone()) else {
        bail!("no output directory: pass --out or set [output] directory");
    };
    Ok((config, out))
}

/// Runs one subcommand and returns the path of the written manifest.
pub fn run(cli: Cli) -> Result<PathBuf> {
    match cli.command {
        Command::Evolve(args) => {
            let (config, out) = load(&args, Workflow::Dynamics)?;
            commands::run_evolve(&config, &out, args.window.into())
        }
        Command::Spectrum(args) => {
            let (config, out) = load(&args, Workflow::Spectrum)?;
            commands::run_spectrum(&config, &out)
        }
        Command::Effective(args) => {
            let (config, out) = load(&args, Workflow::Dynamics)?;
            commands::run_effective(&config, &out)
        }
        Command::Symmetry(args) => {
            let (config, out) = load(&args, Workflow::Dynamics)?;
            commands::run_symmetry(&config, &out)
        }
        Command::Analyze(args) => {
            let options = AnalyzeOptions {
                input: args.input,
                column: args.column,
                window: args.window.into(),
                mode: args.mode.into(),
                prominence: args.prominence,
            };
            commands::run_analyze(&options, &args.out)
        }
    }
}
