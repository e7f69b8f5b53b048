use thiserror::Error;

/// Errors raised by the model, solvers and geometry checks.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("parameter `{name}` must lie in the open interval (0, 1), got {value}")]
    InvalidProbability { name: &'static str, value: f64 },

    #[error("branching vector must not be empty")]
    EmptyBranching,

    #[error("branching entry n{level} must be at least 1")]
    ZeroBranch { level: usize },

    #[error("entry {index} = {value} is outside [0, 1]")]
    OutOfUnitInterval { index: usize, value: f64 },

    #[error("expected {expected} entries, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("node index {index} out of range for a graph with {count} nodes")]
    NodeOutOfRange { index: usize, count: usize },

    #[error("operation requires a 3-level graph, got k = {levels}")]
    RequiresThreeLevels { levels: usize },

    #[error("state {state:?} is not in Region I")]
    NotInRegionOne { state: Vec<f64> },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("no sign change of the curve gap found in the supercritical regime: {diagnostics}")]
    BracketFailure { diagnostics: String },
}

pub type Result<T> = std::result::Result<T, Error>;
