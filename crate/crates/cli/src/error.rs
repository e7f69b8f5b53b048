use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),

    /// A solver or property check contradicted itself.
    #[error("invariant violation: {0}")]
    Invariant(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) | CliError::Io(_) => 2,
            CliError::Invariant(_) => 3,
        }
    }
}

impl From<starlike_sis::Error> for CliError {
    fn from(e: starlike_sis::Error) -> Self {
        match e {
            starlike_sis::Error::BracketFailure { .. } => CliError::Invariant(e.to_string()),
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Invariant(format!("serialization failed: {e}"))
    }
}
