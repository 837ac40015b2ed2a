//! Score-query cost tables: the recursive windowed estimator against the
//! closed-form dilation path.

use std::fmt::Write as _;

use anneal_core::paths::{recursive_cost, RecursiveCostModel};
use num_bigint::BigUint;
use serde::Deserialize;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Deserialize)]
pub struct CostConfig {
    pub models: Vec<RecursiveCostModel>,
    /// Optional contrast row: a dilation-path run of `iterations` steps over
    /// `particles` particles costs exactly `particles · iterations` queries.
    #[serde(default)]
    pub dilation: Option<DilationBudget>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
pub struct DilationBudget {
    pub particles: u64,
    pub iterations: u64,
}

pub fn cost_table(config: &CostConfig) -> Result<String> {
    if config.models.is_empty() {
        return Err(CliError::Config("cost config has no models".to_string()));
    }
    let mut out = String::from("kind,particles,iterations,windows,score_queries\n");
    for model in &config.models {
        let queries = recursive_cost(model).map_err(|e| CliError::Config(e.to_string()))?;
        let _ = writeln!(
            out,
            "recursive,{},{},{},{}",
            model.particles_per_window, model.iterations_per_window, model.windows, queries
        );
    }
    if let Some(d) = config.dilation {
        let queries = BigUint::from(d.particles) * BigUint::from(d.iterations);
        let _ = writeln!(out, "dilation,{},{},,{}", d.particles, d.iterations, queries);
    }
    Ok(out)
}

pub fn load(text: &str) -> Result<CostConfig> {
    serde_json::from_str(text).map_err(|e| {
        CliError::Config(format!(
            "invalid cost config at line {}, column {}: {e}",
            e.line(),
            e.column()
        ))
    })
}
