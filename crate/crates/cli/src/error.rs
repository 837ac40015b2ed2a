//! CLI error type; variants map onto process exit codes.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Configuration parse or validation failure (exit code 2).
    #[error("config error: {0}")]
    Config(String),

    /// Numerical abort inside a run (exit code 3).
    #[error("numerical abort: {0}")]
    Numerical(String),

    /// I/O and other failures (exit code 1).
    #[error("{0}")]
    Other(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Other(_) => 1,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Other(format!("io error: {e}"))
    }
}

impl From<anneal_core::Error> for CliError {
    fn from(e: anneal_core::Error) -> Self {
        match e {
            anneal_core::Error::NonFinite { .. } => CliError::Numerical(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
