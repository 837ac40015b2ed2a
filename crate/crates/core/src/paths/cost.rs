//! Cost model of the recursive windowed score estimator.
//!
//! Estimating the convolutional score near the proposal end by re-targeting
//! window after window multiplies the sampling effort: with `N_p` inner
//! particles, `N_i` inner iterations and `N_s` windows, one outer score query
//! costs `(N_p · N_i)^{N_s}` final-target score queries. The count is exact
//! big-integer arithmetic so the exponential blow-up can be tabulated without
//! overflow.

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecursiveCostModel {
    pub particles_per_window: u64,
    pub iterations_per_window: u64,
    pub windows: u32,
}

impl RecursiveCostModel {
    pub fn validate(&self) -> Result<()> {
        if self.particles_per_window == 0 || self.iterations_per_window == 0 || self.windows == 0 {
            return Err(Error::input("cost model counts must be >= 1"));
        }
        Ok(())
    }
}

/// `(N_p · N_i)^{N_s}` as an exact count of final-target score queries.
pub fn recursive_cost(model: &RecursiveCostModel) -> Result<BigUint> {
    model.validate()?;
    let per_window =
        BigUint::from(model.particles_per_window) * BigUint::from(model.iterations_per_window);
    Ok(per_window.pow(model.windows))
}
