//! Command-line front end: solve one configuration, sweep a parameter, or
//! validate the analytic model against enumeration and simulation.
//!
//! Exit status: 0 success, 1 internal error, 2 invalid input, 3 validation
//! failure.

mod commands;
mod config;
mod output;
mod validate;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::ExperimentConfig;

#[derive(Debug)]
pub enum CliError {
    Input(String),
    Internal(String),
    ValidationFailed,
}

impl CliError {
    /// Errors caused by the user's parameters map to invalid input; the
    /// rest are internal.
    pub fn from_core(e: crowdsignal::Error) -> Self {
        use crowdsignal::Error as E;
        match e {
            E::InvalidAccuracy { .. }
            | E::InvalidCounts { .. }
            | E::NegativeCost(_)
            | E::InvalidBeta(_)
            | E::InvalidBelief { .. }
            | E::DegeneratePrior(_)
            | E::OutOfRangeProbability { .. }
            | E::InvalidGridStep(_)
            | E::ZeroTrials => CliError::Input(e.to_string()),
            other => CliError::Internal(other.to_string()),
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Internal(_) => 1,
            CliError::Input(_) => 2,
            CliError::ValidationFailed => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "invalid input: {m}"),
            CliError::Internal(m) => write!(f, "internal error: {m}"),
            CliError::ValidationFailed => f.write_str("validation failed: see the report"),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "crowdsignal",
    version,
    about = "Information revelation and reward design for crowdsourcing without verification"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Find the optimal revelation strategy and rewards for one configuration.
    Solve(Common),
    /// Solve every point of the configured sweep and write a CSV table.
    Sweep(Common),
    /// Check analytic probabilities against enumeration and simulation.
    Validate {
        #[command(flatten)]
        common: Common,
        /// Number of Monte Carlo trials per check.
        #[arg(long)]
        trials: Option<u64>,
        /// Shift every analytic Monte Carlo target (negative control).
        #[arg(long, hide = true, default_value_t = 0.0)]
        inject_fault: f64,
    },
}

#[derive(Args)]
struct Common {
    /// JSON configuration file.
    #[arg(required_unless_present = "preset", conflicts_with = "preset")]
    path: Option<PathBuf>,
    /// Bundled configuration instead of a file.
    #[arg(long, value_parser = ["fig2", "fig3"])]
    preset: Option<String>,
    /// Step of the revelation-strategy grid; must divide 1.
    #[arg(long)]
    grid_step: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; records go to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn config(&self) -> Result<ExperimentConfig, CliError> {
        let mut c = match (&self.path, &self.preset) {
            (Some(path), _) => config::load(path)?,
            (None, Some(name)) => config::preset(name)?,
            (None, None) => return Err(CliError::Input("no configuration given".to_string())),
        };
        if self.grid_step.is_some() {
            c.grid_step = self.grid_step;
        }
        if self.seed.is_some() {
            c.seed = self.seed;
        }
        if self.out.is_some() {
            c.out_dir = self.out.clone();
        }
        Ok(c)
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Solve(common) => commands::solve(&common.config()?),
        Command::Sweep(common) => commands::sweep(&common.config()?),
        Command::Validate {
            common,
            trials,
            inject_fault,
        } => {
            let mut c = common.config()?;
            if trials.is_some() {
                c.trials = trials;
            }
            validate::validate(&c, inject_fault)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("crowdsignal: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
