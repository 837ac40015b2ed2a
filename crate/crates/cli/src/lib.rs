//! Benchmark CLI for annealed Langevin sampling experiments.
//!
//! Library side of the `sample` binary: config parsing, presets, experiment
//! orchestration, report comparison and the estimator cost table.

pub mod compare;
pub mod config;
pub mod cost;
pub mod error;
pub mod experiment;
pub mod presets;
pub mod svg;

pub use error::{CliError, Result};
