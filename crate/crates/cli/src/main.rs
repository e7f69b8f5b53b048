//! `starsis`: experiments on the SIS model over starlike graphs.
//!
//! Exit codes: 0 success, 2 validation error, 3 invariant violation.

mod commands;
mod config;
mod error;
mod output;
mod verify;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::{ExperimentConfig, Format, GlobalArgs};
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "starsis",
    version,
    about = "Discrete-time SIS dynamics on k-level starlike graphs"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Critical transmission probability, and the regime of --b if given.
    Threshold,
    /// Iterate the level map and write the trajectory.
    Iterate {
        /// Initial state: `ones`, `zeros`, one value for every level, or d1,...,dk.
        #[arg(long, default_value = "ones")]
        start: String,
        /// Keep every n-th step (first and last always kept).
        #[arg(long, default_value_t = 1)]
        thin: usize,
    },
    /// Classify the regime and compute the fixed point with both solvers.
    Fixedpoint,
    /// Sample the hub and tail fixed-point curves (defaults: b = 0.08, 0.125, 0.15).
    Curves,
    /// Region I membership on xy slices (three levels; default b = 0.08).
    Regions {
        #[arg(long, value_delimiter = ',', default_values_t = commands::REGION_Z)]
        z: Vec<f64>,
    },
    /// Monte Carlo runs of the stochastic chain.
    Simulate {
        /// Initial infection: `all` nodes or only the `hub`.
        #[arg(long, default_value = "all")]
        init: String,
    },
    /// Run the property suite; --tol sets the slope tolerance (default b = 0.15).
    Verify,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = ExperimentConfig::resolve(&cli.global)?;
    match cli.command {
        Command::Threshold => commands::threshold(&cfg),
        Command::Iterate { start, thin } => {
            if thin == 0 {
                return Err(CliError::Validation("--thin must be at least 1".into()));
            }
            commands::iterate_cmd(&cfg, &start, thin)
        }
        Command::Fixedpoint => commands::fixedpoint(&cfg),
        Command::Curves => commands::curves(&cfg),
        Command::Regions { z } => commands::regions(&cfg, &z),
        Command::Simulate { init } => commands::simulate(&cfg, &init),
        Command::Verify => {
            if cfg.format_or(Format::Json) == Format::Csv {
                return Err(CliError::Validation("verify only writes JSON".into()));
            }
            cfg.b.get_or_insert(commands::DEFAULT_CURVE_B[2]);
            let report = verify::run(&cfg)?;
            output::emit(cfg.out.as_deref(), &output::to_json(&report)?)?;
            let failed: Vec<&str> = report
                .checks
                .iter()
                .filter(|c| c.status == verify::Status::Fail)
                .map(|c| c.name)
                .collect();
            if failed.is_empty() {
                Ok(())
            } else {
                Err(CliError::Invariant(format!(
                    "failed checks: {}",
                    failed.join(", ")
                )))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
