//! Error type shared by all modules of the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("covariance is not symmetric positive-definite: {0}")]
    NotPositiveDefinite(String),

    #[error("invalid mixture weights: {0}")]
    InvalidWeights(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A particle (or inner-chain state) became non-finite. For outer runs
    /// `index` is the particle id; for the Monte Carlo score estimator it is
    /// the inner-chain id.
    #[error("non-finite state at iteration {iteration}, particle {index}")]
    NonFinite { iteration: usize, index: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn dim(expected: usize, actual: usize) -> Self {
        Error::DimensionMismatch { expected, actual }
    }

    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
