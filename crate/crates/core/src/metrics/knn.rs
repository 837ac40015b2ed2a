//! k-nearest-neighbor divergence estimation from samples alone.
//!
//! The Wang–Kulkarni–Verdú estimator: with `r_k(x_i)` the k-NN distance of
//! `x_i` within its own set (self excluded) and `s_k(x_i)` the k-NN distance
//! to the other set,
//!
//! `KL(p ‖ q) ≈ (d/n) Σ_i log(s_k(x_i) / r_k(x_i)) + log(m / (n-1))`.
//!
//! Points with a zero k-NN distance on either side (exact duplicates) are
//! excluded and counted, since their log ratio is undefined.

use nalgebra::DVector;
use rayon::prelude::*;

use crate::error::{Error, Result};

use super::{Compensated, MetricConfig};

/// Forward and reverse KL estimates plus duplicate-exclusion counts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KnnEstimate {
    pub kl: f64,
    pub rev_kl: f64,
    /// Cloud points dropped in the forward direction.
    pub excluded_forward: usize,
    /// Reference points dropped in the reverse direction.
    pub excluded_reverse: usize,
}

/// k-NN estimates of `KL(cloud ‖ reference)` and the reverse divergence.
///
/// The estimator can return slightly negative values near zero divergence;
/// they are reported as-is.
pub fn knn_kl(
    cloud: &[DVector<f64>],
    reference: &[DVector<f64>],
    cfg: &MetricConfig,
) -> Result<KnnEstimate> {
    cfg.validate()?;
    let k = cfg.knn_k;
    if cloud.len() <= k || reference.len() <= k {
        return Err(Error::input(format!(
            "knn divergence needs more than k = {k} points per set"
        )));
    }
    let d = cloud[0].len();
    if cloud.iter().any(|x| x.len() != d) || reference.iter().any(|x| x.len() != d) {
        return Err(Error::dim(d, 0));
    }
    let (kl, excluded_forward) = kl_direction(cloud, reference, k)?;
    let (rev_kl, excluded_reverse) = kl_direction(reference, cloud, k)?;
    Ok(KnnEstimate {
        kl,
        rev_kl,
        excluded_forward,
        excluded_reverse,
    })
}

fn kl_direction(a: &[DVector<f64>], b: &[DVector<f64>], k: usize) -> Result<(f64, usize)> {
    let n = a.len();
    let m = b.len();
    let d = a[0].len() as f64;

    // Per-point log ratio, or None when a zero distance makes it undefined.
    let ratios: Vec<Option<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let within = kth_smallest(
                a.iter()
                    .enumerate()
                    .filter(|(j, _)| *j != i)
                    .map(|(_, y)| dist_sq(&a[i], y)),
                k,
            );
            let across = kth_smallest(b.iter().map(|y| dist_sq(&a[i], y)), k);
            if within == 0.0 || across == 0.0 {
                None
            } else {
                // log(s/r) with squared distances: 0.5·(log s² - log r²).
                Some(0.5 * (across.ln() - within.ln()))
            }
        })
        .collect();

    let mut acc = Compensated::default();
    let mut included = 0usize;
    for r in &ratios {
        if let Some(v) = r {
            acc.add(*v);
            included += 1;
        }
    }
    if included < 2 {
        return Err(Error::input(
            "knn divergence: too many duplicate points, fewer than 2 usable",
        ));
    }
    let kl = d / included as f64 * acc.total() + (m as f64 / (included as f64 - 1.0)).ln();
    Ok((kl, n - included))
}

fn dist_sq(x: &DVector<f64>, y: &DVector<f64>) -> f64 {
    let mut r2 = 0.0;
    for a in 0..x.len() {
        let diff = x[a] - y[a];
        r2 += diff * diff;
    }
    r2
}

/// k-th smallest value of a stream, tracked with a size-k descending buffer.
fn kth_smallest<I: Iterator<Item = f64>>(iter: I, k: usize) -> f64 {
    let mut worst_first: Vec<f64> = Vec::with_capacity(k);
    for v in iter {
        if worst_first.len() < k {
            worst_first.push(v);
            if worst_first.len() == k {
                worst_first.sort_by(|a, b| b.partial_cmp(a).unwrap());
            }
        } else if v < worst_first[0] {
            worst_first[0] = v;
            let mut i = 0;
            while i + 1 < k && worst_first[i] < worst_first[i + 1] {
                worst_first.swap(i, i + 1);
                i += 1;
            }
        }
    }
    if worst_first.len() < k {
        f64::INFINITY
    } else {
        worst_first[0]
    }
}
