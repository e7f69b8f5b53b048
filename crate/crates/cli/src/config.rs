use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::Deserialize;
use starlike_sis::{ModelParams, StarlikeTopology};

use crate::error::CliError;

pub const DEFAULT_A: f64 = 0.5;
pub const DEFAULT_BRANCHING: [usize; 2] = [6, 10];
pub const DEFAULT_MAX_ITER: usize = 1_000_000;
pub const DEFAULT_HORIZON: usize = 500;
pub const DEFAULT_TRIALS: usize = 100;
pub const DEFAULT_SEED: u64 = 20_240_501;
/// Regime ties: |b - b_crit| at or below this counts as critical.
pub const EQ_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// Flags shared by every subcommand. Anything left unset falls back to the
/// `--config` file and then to the built-in default.
#[derive(Debug, Clone, Default, Args)]
pub struct GlobalArgs {
    /// Probability that an infected node stays infected (0 < a < 1).
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub a: Option<f64>,
    /// Per-edge transmission probability (0 < b < 1).
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub b: Option<f64>,
    /// Children per node at each level, e.g. 6,10.
    #[arg(long, global = true, value_delimiter = ',')]
    pub branching: Option<Vec<usize>>,
    /// Output file; stdout when omitted.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub tol: Option<f64>,
    #[arg(long = "max-iter", global = true)]
    pub max_iter: Option<usize>,
    #[arg(long = "grid-n", global = true)]
    pub grid_n: Option<usize>,
    #[arg(long, global = true)]
    pub horizon: Option<usize>,
    #[arg(long, global = true)]
    pub trials: Option<usize>,
    /// JSON file with the same field names as the flags (snake_case).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    a: Option<f64>,
    b: Option<f64>,
    branching: Option<Vec<usize>>,
    out: Option<PathBuf>,
    format: Option<Format>,
    seed: Option<u64>,
    tol: Option<f64>,
    max_iter: Option<usize>,
    grid_n: Option<usize>,
    horizon: Option<usize>,
    trials: Option<usize>,
}

/// Resolved settings for one run.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub a: f64,
    pub b: Option<f64>,
    pub branching: Vec<usize>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub seed: u64,
    pub tol: Option<f64>,
    pub max_iter: usize,
    pub grid_n: Option<usize>,
    pub horizon: usize,
    pub trials: usize,
    pub topo: StarlikeTopology,
}

fn read_file(path: &Path) -> Result<FileConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Validation(format!("invalid config {}: {e}", path.display())))
}

impl ExperimentConfig {
    pub fn resolve(args: &GlobalArgs) -> Result<Self, CliError> {
        let file = match &args.config {
            Some(path) => read_file(path)?,
            None => FileConfig::default(),
        };
        let a = args.a.or(file.a).unwrap_or(DEFAULT_A);
        let b = args.b.or(file.b);
        let branching = args
            .branching
            .clone()
            .or(file.branching)
            .unwrap_or_else(|| DEFAULT_BRANCHING.to_vec());
        let tol = args.tol.or(file.tol);
        let max_iter = args.max_iter.or(file.max_iter).unwrap_or(DEFAULT_MAX_ITER);
        let horizon = args.horizon.or(file.horizon).unwrap_or(DEFAULT_HORIZON);
        let trials = args.trials.or(file.trials).unwrap_or(DEFAULT_TRIALS);

        ModelParams::new(a, b.unwrap_or(0.5))?;
        let topo = StarlikeTopology::new(&branching)?;
        if let Some(t) = tol {
            if !(t > 0.0 && t.is_finite()) {
                return Err(CliError::Validation(format!(
                    "--tol must be a positive number, got {t}"
                )));
            }
        }
        if max_iter == 0 {
            return Err(CliError::Validation("--max-iter must be at least 1".into()));
        }
        if horizon == 0 {
            return Err(CliError::Validation("--horizon must be at least 1".into()));
        }
        if trials == 0 {
            return Err(CliError::Validation("--trials must be at least 1".into()));
        }
        let grid_n = args.grid_n.or(file.grid_n);
        if matches!(grid_n, Some(n) if n < 2) {
            return Err(CliError::Validation("--grid-n must be at least 2".into()));
        }
        Ok(Self {
            a,
            b,
            branching,
            out: args.out.clone().or(file.out),
            format: args.format.or(file.format),
            seed: args.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
            tol,
            max_iter,
            grid_n,
            horizon,
            trials,
            topo,
        })
    }

    /// Parameters for a command that needs `--b`.
    pub fn params(&self) -> Result<ModelParams, CliError> {
        let b = self
            .b
            .ok_or_else(|| CliError::Validation("this command requires --b".into()))?;
        Ok(ModelParams::new(self.a, b)?)
    }

    pub fn params_with(&self, b: f64) -> Result<ModelParams, CliError> {
        Ok(ModelParams::new(self.a, b)?)
    }

    pub fn tol_or(&self, default: f64) -> f64 {
        self.tol.unwrap_or(default)
    }

    pub fn grid_or(&self, default: usize) -> usize {
        self.grid_n.unwrap_or(default)
    }

    pub fn format_or(&self, default: Format) -> Format {
        self.format.unwrap_or(default)
    }
}
