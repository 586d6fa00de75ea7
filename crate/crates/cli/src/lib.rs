//! Command-line front end for the SE(3) complementary-filter simulator.

pub mod commands;
pub mod config;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use hocf::lti::TransferFunction;
use hocf::sim::FilterChoice;

use commands::{Exit, Failure};
use config::{CaseName, FilterName, LoadedConfig, CONFIG_KEYS};

#[derive(Debug, Parser)]
#[command(name = "hocf", version, about = "SE(3) pose observer with LTI innovation filtering")]
#[command(after_help = CONFIG_KEYS)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate one scenario and write the per-step metrics as CSV.
    Run(ScenarioArgs),
    /// Run H1, H2 and H3 on one scenario and print steady-state errors.
    Compare(ScenarioArgs),
    /// Check a filter for strict positive realness.
    CheckSpr(SprArgs),
    /// Compare the landmark gradient against finite differences.
    CheckGradient(GradientArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// Configuration file (TOML).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Print progress to stderr.
    #[arg(short, long)]
    pub verbose: bool,
}

#[derive(Debug, Args)]
pub struct ScenarioArgs {
    #[command(flatten)]
    pub common: Common,
    /// Noise seed (overrides the config).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Filter preset (overrides the config).
    #[arg(long, value_enum)]
    pub filter: Option<FilterName>,
    /// Scenario (overrides the config).
    #[arg(long, value_enum)]
    pub case: Option<CaseName>,
}

#[derive(Debug, Args)]
pub struct SprArgs {
    #[command(flatten)]
    pub common: Common,
    /// Filter preset.
    #[arg(long, value_enum, conflicts_with_all = ["num", "den"])]
    pub filter: Option<FilterName>,
    /// Numerator coefficients, descending powers of s.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, requires = "den")]
    pub num: Option<Vec<f64>>,
    /// Denominator coefficients, descending powers of s.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, requires = "num")]
    pub den: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct GradientArgs {
    #[command(flatten)]
    pub common: Common,
    /// Number of random (estimate, truth) pairs.
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Finite-difference step.
    #[arg(long, default_value_t = 1e-5)]
    pub step: f64,
}

fn load(common: &Common) -> Result<LoadedConfig, Failure> {
    match &common.config {
        Some(path) => Ok(LoadedConfig::read(path)?),
        None => Ok(LoadedConfig::default()),
    }
}

/// Executes a parsed command line and returns the process exit code.
pub fn execute(cli: Cli) -> Exit {
    match dispatch(cli) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.exit
        }
    }
}

fn dispatch(cli: Cli) -> Result<Exit, Failure> {
    match cli.command {
        Command::Run(a) => {
            let cfg = load(&a.common)?.scenario(a.case.map(Into::into), a.filter.map(Into::into), a.seed)?;
            commands::run(&cfg, a.common.output.as_deref(), a.common.verbose)?;
            Ok(Exit::Ok)
        }
        Command::Compare(a) => {
            let cfg = load(&a.common)?.scenario(a.case.map(Into::into), a.filter.map(Into::into), a.seed)?;
            commands::compare(&cfg, a.common.output.as_deref(), a.common.verbose)?;
            Ok(Exit::Ok)
        }
        Command::CheckSpr(a) => {
            let filter = match (&a.filter, &a.num, &a.den) {
                (Some(f), _, _) => FilterChoice::from(*f),
                (None, Some(num), Some(den)) => FilterChoice::Custom(TransferFunction::new(num, den)?),
                _ => load(&a.common)?.filter()?.unwrap_or(FilterChoice::H2),
            };
            commands::check_spr(&filter)
        }
        Command::CheckGradient(a) => {
            let cfg = load(&a.common)?.scenario(None, None, None)?;
            if !(a.step > 0.0) {
                return Err(Failure::new(Exit::Usage, "--step must be positive"));
            }
            commands::check_gradient(&cfg.landmarks, a.samples, a.seed, a.step)
        }
    }
}
