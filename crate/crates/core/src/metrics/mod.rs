//! Convergence diagnostics between a particle cloud and the target.
//!
//! - [`ksd`]: kernel Stein discrepancy with the inverse-multiquadric base
//!   kernel; needs only the target score.
//! - [`mmd`]: Gaussian-kernel maximum mean discrepancy against reference
//!   samples.
//! - [`knn_kl`]: k-nearest-neighbor estimates of KL and reverse KL from
//!   samples alone.
//! - [`sinkhorn_w2`]: entropic upper bound on the 2-Wasserstein distance.
//! - [`mms`]: multimodality score, the RMSE between actual and expected
//!   particle counts per mode.
//!
//! All metrics are pure functions of their inputs. The O(n²) kernel sums are
//! parallelized over rows with compensated accumulation, so results do not
//! depend on the number of worker threads.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::GaussianMixture;

mod knn;
mod ksd;
mod mmd;
mod sinkhorn;

pub use knn::{knn_kl, KnnEstimate};
pub use ksd::ksd;
pub use mmd::mmd;
pub use sinkhorn::{sinkhorn_w2, SinkhornResult};

/// Tunables of the metric suite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricConfig {
    /// IMQ exponent β of the KSD base kernel, in [0, 1].
    pub ksd_beta: f64,
    /// Gaussian-kernel bandwidth h of the MMD, `K = exp(-‖x-y‖²/2h)`.
    pub mmd_bandwidth: f64,
    /// Neighbor count of the k-NN divergence estimator.
    pub knn_k: usize,
    /// Entropic regularization ε of the Sinkhorn solver (applied on
    /// standardized data).
    pub ot_epsilon: f64,
    pub ot_max_iterations: usize,
    /// L1 marginal-violation tolerance of the Sinkhorn solver.
    pub ot_tolerance: f64,
}

impl Default for MetricConfig {
    fn default() -> Self {
        Self {
            ksd_beta: 0.5,
            mmd_bandwidth: 1.0,
            knn_k: 1,
            ot_epsilon: 0.05,
            ot_max_iterations: 2000,
            ot_tolerance: 1e-6,
        }
    }
}

impl MetricConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.ksd_beta) {
            return Err(Error::input("ksd beta must be in [0, 1]"));
        }
        if !(self.mmd_bandwidth > 0.0) {
            return Err(Error::input("mmd bandwidth must be > 0"));
        }
        if self.knn_k == 0 {
            return Err(Error::input("knn neighbor count must be >= 1"));
        }
        if !(self.ot_epsilon > 0.0) || !(self.ot_tolerance > 0.0) || self.ot_max_iterations == 0 {
            return Err(Error::input("sinkhorn config must be positive"));
        }
        Ok(())
    }
}

/// Per-checkpoint metric values. Disabled metrics stay `None` and serialize
/// to empty CSV cells.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub iteration: usize,
    #[serde(default)]
    pub ksd: Option<f64>,
    #[serde(default)]
    pub mmd: Option<f64>,
    #[serde(default)]
    pub kl: Option<f64>,
    #[serde(default)]
    pub rev_kl: Option<f64>,
    #[serde(default)]
    pub ot: Option<f64>,
    #[serde(default)]
    pub mms: Option<f64>,
}

/// Diagnostics of one run: one row per checkpoint plus solver warnings.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub label: String,
    pub rows: Vec<MetricsRow>,
    /// Points dropped by the k-NN estimator because of zero neighbor
    /// distances (duplicates), summed over checkpoints.
    #[serde(default)]
    pub knn_excluded_points: u64,
    /// Checkpoints where the Sinkhorn solver hit its iteration cap.
    #[serde(default)]
    pub ot_unconverged_checkpoints: u64,
    /// ε the OT values were computed at.
    #[serde(default)]
    pub ot_epsilon: f64,
}

impl DiagnosticsReport {
    pub fn new(label: impl Into<String>) -> Self {
        Self {
            label: label.into(),
            rows: Vec::new(),
            knn_excluded_points: 0,
            ot_unconverged_checkpoints: 0,
            ot_epsilon: 0.0,
        }
    }

    pub fn iterations(&self) -> Vec<usize> {
        self.rows.iter().map(|r| r.iteration).collect()
    }

    pub fn final_row(&self) -> Option<&MetricsRow> {
        self.rows.last()
    }

    /// CSV with a fixed header; absent metrics render as empty cells.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iteration,ksd,mmd,kl,rev_kl,ot,mms\n");
        for r in &self.rows {
            out.push_str(&r.iteration.to_string());
            for v in [r.ksd, r.mmd, r.kl, r.rev_kl, r.ot, r.mms] {
                out.push(',');
                if let Some(v) = v {
                    out.push_str(&v.to_string());
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Multimodality score: assign each particle to the nearest component mean,
/// then return the RMSE between actual and expected (`w_m · n`) counts.
pub fn mms(cloud: &[DVector<f64>], gmm: &GaussianMixture) -> Result<f64> {
    if cloud.is_empty() {
        return Err(Error::input("mms needs at least one particle"));
    }
    let d = gmm.dim();
    if cloud.iter().any(|x| x.len() != d) {
        return Err(Error::dim(d, cloud[0].len()));
    }
    let counts = mode_counts(cloud, gmm);
    let n = cloud.len() as f64;
    let m = gmm.num_components() as f64;
    let sq_sum: f64 = counts
        .iter()
        .zip(gmm.weights())
        .map(|(a, w)| {
            let e = w * n;
            (*a as f64 - e) * (*a as f64 - e)
        })
        .sum();
    Ok((sq_sum / m).sqrt())
}

/// Particles per mode under nearest-mean assignment (ties go to the lowest
/// component index).
pub fn mode_counts(cloud: &[DVector<f64>], gmm: &GaussianMixture) -> Vec<usize> {
    let mut counts = vec![0usize; gmm.num_components()];
    for x in cloud {
        let mut best = 0usize;
        let mut best_d = f64::INFINITY;
        for (m, c) in gmm.components().iter().enumerate() {
            let dist = (x - c.mean()).norm_squared();
            if dist < best_d {
                best_d = dist;
                best = m;
            }
        }
        counts[best] += 1;
    }
    counts
}

/// Marks each mode that has at least one particle within `k_sigma` component
/// standard deviations (Mahalanobis distance) of its mean.
pub fn mode_occupancy(cloud: &[DVector<f64>], gmm: &GaussianMixture, k_sigma: f64) -> Result<Vec<bool>> {
    let threshold = k_sigma * k_sigma;
    let mut occupied = vec![false; gmm.num_components()];
    for (m, comp) in gmm.components().iter().enumerate() {
        for x in cloud {
            if comp.mahalanobis_sq(x)? <= threshold {
                occupied[m] = true;
                break;
            }
        }
    }
    Ok(occupied)
}

/// Neumaier-compensated accumulator; keeps O(n²) reductions independent of
/// evaluation tiling to well below 1e-10 relative.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Compensated {
    sum: f64,
    comp: f64,
}

impl Compensated {
    pub(crate) fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Parallel map over row indices followed by a sequential compensated
/// reduction; the result does not depend on the thread count.
pub(crate) fn sum_rows<F>(n: usize, row: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    use rayon::prelude::*;
    let rows: Vec<f64> = (0..n).into_par_iter().map(row).collect();
    let mut acc = Compensated::default();
    for r in rows {
        acc.add(r);
    }
    acc.total()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Gaussian;
    use approx::assert_relative_eq;

    fn grid_mixture(count: usize) -> GaussianMixture {
        let comps = (0..count)
            .map(|m| {
                Gaussian::isotropic(DVector::from_vec(vec![m as f64 * 10.0, 0.0]), 1.0).unwrap()
            })
            .collect();
        GaussianMixture::equal_weights(comps).unwrap()
    }

    #[test]
    fn mms_is_zero_for_perfect_coverage() {
        let gmm = grid_mixture(40);
        let mut cloud = Vec::new();
        for m in 0..40 {
            for _ in 0..25 {
                cloud.push(DVector::from_vec(vec![m as f64 * 10.0, 0.0]));
            }
        }
        assert_relative_eq!(mms(&cloud, &gmm).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn mms_all_particles_on_one_mode() {
        // 1000 particles on mode 1 of 40 equal-weight modes:
        // sqrt((975² + 39·25²)/40) ≈ 156.12.
        let gmm = grid_mixture(40);
        let cloud = vec![DVector::from_vec(vec![0.0, 0.0]); 1000];
        let expected = ((975.0f64 * 975.0 + 39.0 * 625.0) / 40.0).sqrt();
        assert_relative_eq!(mms(&cloud, &gmm).unwrap(), expected, epsilon = 1e-10);
        assert_relative_eq!(expected, 156.12495, epsilon = 1e-4);
    }

    #[test]
    fn mms_invariant_to_particle_order() {
        let gmm = grid_mixture(4);
        let mut cloud: Vec<DVector<f64>> = (0..64)
            .map(|i| DVector::from_vec(vec![(i % 4) as f64 * 10.0 + 0.1, 0.2]))
            .collect();
        let a = mms(&cloud, &gmm).unwrap();
        cloud.reverse();
        assert_eq!(mms(&cloud, &gmm).unwrap(), a);
    }

    #[test]
    fn mms_decreases_toward_expected_histogram() {
        let gmm = grid_mixture(4);
        let make_cloud = |per_mode: [usize; 4]| {
            let mut cloud = Vec::new();
            for (m, k) in per_mode.iter().enumerate() {
                for _ in 0..*k {
                    cloud.push(DVector::from_vec(vec![m as f64 * 10.0, 0.0]));
                }
            }
            cloud
        };
        let worst = mms(&make_cloud([40, 0, 0, 0]), &gmm).unwrap();
        let mid = mms(&make_cloud([20, 10, 5, 5]), &gmm).unwrap();
        let best = mms(&make_cloud([10, 10, 10, 10]), &gmm).unwrap();
        assert!(best < mid && mid < worst);
        assert_relative_eq!(best, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn occupancy_uses_mahalanobis_balls() {
        let gmm = grid_mixture(2);
        let cloud = vec![
            DVector::from_vec(vec![2.9, 0.0]),  // within 3σ of mode 0 at the origin
            DVector::from_vec(vec![20.0, 0.0]), // 10σ past mode 1 at (10, 0)
        ];
        let occ = mode_occupancy(&cloud, &gmm, 3.0).unwrap();
        assert!(occ[0]);
        assert!(!occ[1]);
    }

    #[test]
    fn compensated_sum_matches_naive_on_benign_data() {
        let mut acc = Compensated::default();
        for i in 0..1000 {
            acc.add(i as f64 * 1e-3);
        }
        assert_relative_eq!(acc.total(), 499.5, epsilon = 1e-9);
    }

    #[test]
    fn csv_renders_missing_metrics_as_empty_cells() {
        let mut report = DiagnosticsReport::new("demo");
        report.rows.push(MetricsRow {
            iteration: 10,
            ksd: Some(0.5),
            mms: Some(2.0),
            ..Default::default()
        });
        let csv = report.to_csv();
        assert_eq!(csv, "iteration,ksd,mmd,kl,rev_kl,ot,mms\n10,0.5,,,,,2\n");
    }
}
