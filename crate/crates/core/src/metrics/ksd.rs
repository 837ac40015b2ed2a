//! Kernel Stein discrepancy with the inverse-multiquadric base kernel.
//!
//! The Stein kernel built from a base kernel `k` and the target score
//! `s = ∇log π` is
//!
//! `u(x, y) = s(x)ᵀs(y) k + s(x)ᵀ∇_y k + ∇_x kᵀ s(y) + ∇_x·∇_y k`.
//!
//! With `k(x, y) = (1 + ‖x-y‖²)^{-β}`, writing `q = 1 + ‖x-y‖²` and
//! `r = x - y`:
//!
//! - `∇_y k =  2β q^{-β-1} r`, `∇_x k = -2β q^{-β-1} r`
//! - `∇_x·∇_y k = 2β (d q^{-β-1} - 2(β+1) q^{-β-2} ‖r‖²)`
//!
//! KSD² is estimated by the V-statistic (the full double sum over the cloud,
//! diagonal included, divided by n²), which is the plug-in of the
//! `p ⊗ p` expectation and non-negative by construction.

use nalgebra::DVector;

use crate::error::{Error, Result};

use super::{sum_rows, Compensated, MetricConfig};

/// Square root of the (clamped) V-statistic of the Stein kernel.
pub fn ksd<F>(cloud: &[DVector<f64>], target_score: F, cfg: &MetricConfig) -> Result<f64>
where
    F: Fn(&DVector<f64>) -> Result<DVector<f64>> + Sync,
{
    cfg.validate()?;
    if cloud.is_empty() {
        return Err(Error::input("ksd needs at least one particle"));
    }
    let d = cloud[0].len();
    if cloud.iter().any(|x| x.len() != d) {
        return Err(Error::dim(d, 0));
    }
    let scores = cloud
        .iter()
        .map(&target_score)
        .collect::<Result<Vec<_>>>()?;

    let n = cloud.len();
    let beta = cfg.ksd_beta;
    let total = sum_rows(n, |i| {
        let mut row = Compensated::default();
        for j in 0..n {
            row.add(stein_kernel(&cloud[i], &cloud[j], &scores[i], &scores[j], beta));
        }
        row.total()
    });
    let v_stat = total / (n as f64 * n as f64);
    Ok(v_stat.max(0.0).sqrt())
}

fn stein_kernel(
    x: &DVector<f64>,
    y: &DVector<f64>,
    sx: &DVector<f64>,
    sy: &DVector<f64>,
    beta: f64,
) -> f64 {
    let d = x.len();
    let mut r2 = 0.0;
    let mut sx_r = 0.0;
    let mut sy_r = 0.0;
    let mut sx_sy = 0.0;
    for a in 0..d {
        let diff = x[a] - y[a];
        r2 += diff * diff;
        sx_r += sx[a] * diff;
        sy_r += sy[a] * diff;
        sx_sy += sx[a] * sy[a];
    }
    let q = 1.0 + r2;
    let k0 = q.powf(-beta);
    let k1 = k0 / q; // q^{-β-1}
    let k2 = k1 / q; // q^{-β-2}

    let score_term = sx_sy * k0;
    let cross = 2.0 * beta * k1 * (sx_r - sy_r);
    let trace = 2.0 * beta * (d as f64 * k1 - 2.0 * (beta + 1.0) * k2 * r2);
    score_term + cross + trace
}
