//! Maximum mean discrepancy with a Gaussian kernel.
//!
//! `MMD² = E_pp[K] + E_ππ[K] - 2 E_pπ[K]` with `K(x, y) = exp(-‖x-y‖²/2h)`.
//! The within-set expectations use U-statistics (diagonal excluded), the
//! cross term averages over all n·m pairs. For identical point sets the
//! U-statistic estimate is slightly negative (the diagonal it omits carries
//! the largest kernel values), so the clamp at zero makes `mmd(A, A) = 0`
//! exactly.

use nalgebra::DVector;

use crate::error::{Error, Result};

use super::{sum_rows, Compensated, MetricConfig};

/// `sqrt(max(0, MMD²))` between two sample sets.
pub fn mmd(cloud: &[DVector<f64>], reference: &[DVector<f64>], cfg: &MetricConfig) -> Result<f64> {
    cfg.validate()?;
    let n = cloud.len();
    let m = reference.len();
    if n < 2 || m < 2 {
        return Err(Error::input("mmd needs at least two points per set"));
    }
    let d = cloud[0].len();
    if cloud.iter().any(|x| x.len() != d) || reference.iter().any(|x| x.len() != d) {
        return Err(Error::dim(d, 0));
    }
    let h = cfg.mmd_bandwidth;

    let within_cloud = within_u_stat(cloud, h);
    let within_ref = within_u_stat(reference, h);
    let cross = sum_rows(n, |i| {
        let mut row = Compensated::default();
        for y in reference {
            row.add(kernel(&cloud[i], y, h));
        }
        row.total()
    }) / (n as f64 * m as f64);

    let sq = within_cloud + within_ref - 2.0 * cross;
    Ok(sq.max(0.0).sqrt())
}

fn kernel(x: &DVector<f64>, y: &DVector<f64>, h: f64) -> f64 {
    let mut r2 = 0.0;
    for a in 0..x.len() {
        let diff = x[a] - y[a];
        r2 += diff * diff;
    }
    (-r2 / (2.0 * h)).exp()
}

fn within_u_stat(set: &[DVector<f64>], h: f64) -> f64 {
    let n = set.len();
    let total = sum_rows(n, |i| {
        let mut row = Compensated::default();
        for (j, y) in set.iter().enumerate() {
            if j != i {
                row.add(kernel(&set[i], y, h));
            }
        }
        row.total()
    });
    total / (n as f64 * (n as f64 - 1.0))
}
