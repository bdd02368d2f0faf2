//! Experiment runner for the hierarchical Anderson spectral-statistics
//! laboratory.
//!
//! Exit codes: 0 on success (statistical "fail" verdicts are recorded in
//! the JSON summaries, not the exit status), 2 for configuration errors,
//! 3 for runtime or numerical failures.

// parameter checks use negated comparisons (`!(x > 0.0)`) so NaN inputs are
// rejected along with out-of-range ones
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod output;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::Experiment;
use config::{ExperimentConfig, Overrides};

#[derive(Debug)]
pub enum CliError {
    Config(Vec<String>),
    Runtime(anyhow::Error),
}

#[derive(Parser)]
#[command(
    name = "hieranderson",
    version,
    about = "Spectral statistics of the hierarchical Anderson model with non-homogeneous disorder"
)]
struct Cli {
    /// JSON configuration file; command-line flags override its entries
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(flatten)]
    overrides: Overrides,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// One realization: eigenvalues of the full and truncated operator
    Spectrum,
    /// Ensemble-averaged integrated density of states over an energy grid
    Ids,
    /// Full-model Poisson suite at one energy: count and gap goodness of fit
    Poisson,
    /// Purely random operator suite against its exact intensity
    PureRandom,
    /// Superposition condition sums across a ladder of volumes
    Grigelionis,
    /// Exact block-negligibility sequences with slope fit
    HypothesisH,
    /// Laplacian-versus-disorder threshold sequences with verdict
    Threshold,
    /// Ensemble variance of the normalized resolvent trace across volumes
    TraceVariance,
    /// Calibration of the goodness-of-fit tests against reference samplers
    Selftest,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Ids => "ids",
            Command::Poisson => "poisson",
            Command::PureRandom => "pure-random",
            Command::Grigelionis => "grigelionis",
            Command::HypothesisH => "hypothesis-h",
            Command::Threshold => "threshold",
            Command::TraceVariance => "trace-variance",
            Command::Selftest => "selftest",
        }
    }
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| {
                CliError::Config(vec![format!("cannot read {}: {e}", path.display())])
            })?;
            serde_json::from_str(&text).map_err(|e| {
                CliError::Config(vec![format!("cannot parse {}: {e}", path.display())])
            })?
        }
        None => ExperimentConfig::default(),
    };
    cfg.apply_overrides(&cli.overrides);
    let violations = cfg.violations();
    if !violations.is_empty() {
        return Err(CliError::Config(violations));
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = load_config(&cli)?;
    let exp = Experiment::new(cfg, cli.command.name())?;
    match cli.command {
        Command::Spectrum => commands::spectrum(&exp),
        Command::Ids => commands::ids(&exp),
        Command::Poisson => commands::poisson(&exp),
        Command::PureRandom => commands::pure_random(&exp),
        Command::Grigelionis => commands::grigelionis(&exp),
        Command::HypothesisH => commands::hypothesis_h(&exp),
        Command::Threshold => commands::threshold(&exp),
        Command::TraceVariance => commands::trace_variance(&exp),
        Command::Selftest => commands::selftest(&exp),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Config(messages)) => {
            for m in messages {
                eprintln!("config error: {m}");
            }
            ExitCode::from(2)
        }
        Err(CliError::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(3)
        }
    }
}
