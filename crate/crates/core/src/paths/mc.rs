//! Monte Carlo estimator of the convolutional-path score.
//!
//! For a standard-Gaussian proposal and the exponential schedule
//! `λ = e^{-2(T-t)}`, the path score at `x` is
//!
//! `∇log μ_t(x) = (e^{-(T-t)} / (1 - e^{-2(T-t)})) · E_{y ~ m_t}[y - e^{T-t} x]`
//!
//! where `m_t(y|x) ∝ π(y) · N(y; e^{T-t} x, (e^{2(T-t)} - 1) I)` is the
//! blurred target. The expectation is replaced by an average over samples
//! drawn with an inner unadjusted Langevin chain; every score query therefore
//! spawns a fresh sampling run, which is exactly what makes this estimator
//! expensive (see [`recursive_cost`](super::recursive_cost) for the windowed
//! variant's total).
//!
//! All internal algebra is expressed through λ: `e^{T-t} = λ^{-1/2}`, the
//! blur covariance is `((1-λ)/λ) I` and the prefactor is `√λ/(1-λ)`, which
//! stays finite for λ ∈ (0, 1) where the direct exponentials would overflow.

use nalgebra::DVector;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::TargetDensity;

/// Inner-sampler configuration for the Monte Carlo score estimator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    /// Number of blurred-target samples averaged per score query. Each
    /// sample is the final state of its own inner chain, so samples are
    /// independent across chains.
    pub samples: usize,
    /// Unadjusted Langevin steps per inner chain.
    pub chain_iterations: usize,
    /// Inner chain step size.
    pub step: f64,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            samples: 1000,
            chain_iterations: 60,
            step: 0.05,
        }
    }
}

impl McConfig {
    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(Error::input("estimator needs at least one inner sample"));
        }
        if self.chain_iterations == 0 {
            return Err(Error::input("inner chain needs at least one iteration"));
        }
        if !self.step.is_finite() || self.step <= 0.0 {
            return Err(Error::input("inner step size must be > 0"));
        }
        Ok(())
    }
}

/// Diagnostics of one estimator call.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InnerChainStats {
    /// Inner chains run (= samples collected).
    pub chains: usize,
    /// Total inner Langevin steps, i.e. target-score queries.
    pub steps: u64,
    /// Mean gradient norm of the blurred target over all inner steps.
    pub mean_grad_norm: f64,
    /// Largest gradient norm seen.
    pub max_grad_norm: f64,
}

/// Monte Carlo convolutional score at algorithm time `t` with horizon `T`.
///
/// Requires `0 ≤ t < T` so that the blur variance `e^{2(T-t)} - 1` is
/// positive.
pub fn convolutional_mc_score(
    target: &dyn TargetDensity,
    x: &DVector<f64>,
    t: f64,
    horizon: f64,
    config: &McConfig,
    rng: &mut ChaCha8Rng,
) -> Result<(DVector<f64>, InnerChainStats)> {
    if !t.is_finite() || !horizon.is_finite() || t < 0.0 || t >= horizon {
        return Err(Error::input(format!(
            "estimator needs 0 <= t < T, got t = {t}, T = {horizon}"
        )));
    }
    let lambda = (-2.0 * (horizon - t)).exp();
    mc_score_at_lambda(target, x, lambda, config, rng)
}

/// Same estimator parameterized by the annealing level `λ = e^{-2(T-t)}`,
/// which must lie strictly inside (0, 1).
pub fn mc_score_at_lambda(
    target: &dyn TargetDensity,
    x: &DVector<f64>,
    lambda: f64,
    config: &McConfig,
    rng: &mut ChaCha8Rng,
) -> Result<(DVector<f64>, InnerChainStats)> {
    config.validate()?;
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::input(format!(
            "estimator needs lambda strictly in (0, 1), got {lambda}"
        )));
    }
    let d = target.dim();
    if x.len() != d {
        return Err(Error::dim(d, x.len()));
    }

    let center = x / lambda.sqrt(); // e^{T-t} x
    let blur_var = (1.0 - lambda) / lambda; // e^{2(T-t)} - 1
    let h = config.step;
    let noise_scale = (2.0 * h).sqrt();

    let mut mean_dev = DVector::zeros(d);
    let mut grad_norm_sum = 0.0;
    let mut grad_norm_max = 0.0f64;

    let mut y = DVector::zeros(d);
    let mut grad = DVector::zeros(d);
    for _ in 0..config.samples {
        // Warm start from the Gaussian blur factor, the dominant factor of
        // m_t near the target end of the path.
        for a in 0..d {
            y[a] = center[a] + blur_var.sqrt() * rng.sample::<f64, _>(StandardNormal);
        }
        for k in 0..config.chain_iterations {
            // ∇log m_t(y) = ∇log π(y) - (y - center)/blur_var
            grad.copy_from(&target.score(&y)?);
            for a in 0..d {
                grad[a] -= (y[a] - center[a]) / blur_var;
            }
            let g_norm = grad.norm();
            grad_norm_sum += g_norm;
            grad_norm_max = grad_norm_max.max(g_norm);
            for a in 0..d {
                y[a] += h * grad[a] + noise_scale * rng.sample::<f64, _>(StandardNormal);
            }
            if y.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite {
                    iteration: k,
                    index: 0,
                });
            }
        }
        mean_dev += &y - &center;
    }
    mean_dev /= config.samples as f64;

    let prefactor = lambda.sqrt() / (1.0 - lambda); // e^{-(T-t)} / (1 - e^{-2(T-t)})
    let steps = config.samples as u64 * config.chain_iterations as u64;
    Ok((
        prefactor * mean_dev,
        InnerChainStats {
            chains: config.samples,
            steps,
            mean_grad_norm: grad_norm_sum / steps as f64,
            max_grad_norm: grad_norm_max,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Gaussian;
    use rand::SeedableRng;

    #[test]
    fn zero_inner_samples_is_an_input_error() {
        let g = Gaussian::standard(1);
        let cfg = McConfig {
            samples: 0,
            ..McConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(
            convolutional_mc_score(&g, &DVector::zeros(1), 0.0, 1.0, &cfg, &mut rng).is_err()
        );
    }

    #[test]
    fn t_at_or_past_horizon_is_rejected() {
        let g = Gaussian::standard(1);
        let cfg = McConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(convolutional_mc_score(&g, &DVector::zeros(1), 1.0, 1.0, &cfg, &mut rng).is_err());
        assert!(convolutional_mc_score(&g, &DVector::zeros(1), 2.0, 1.0, &cfg, &mut rng).is_err());
    }

    #[test]
    fn standard_gaussian_target_gives_minus_x() {
        // The convolutional path of N(0, I) with a standard proposal is
        // N(0, I) at every λ, so the score is -x.
        let g = Gaussian::standard(2);
        let cfg = McConfig {
            samples: 4000,
            chain_iterations: 60,
            step: 0.05,
        };
        let x = DVector::from_vec(vec![1.4, -0.9]);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let (s, stats) = mc_score_at_lambda(&g, &x, 0.5, &cfg, &mut rng).unwrap();
        let err = (&s + &x).norm() / x.norm();
        assert!(err < 0.08, "relative error {err}");
        assert_eq!(stats.steps, 4000 * 60);
        assert!(stats.mean_grad_norm.is_finite());
    }

    #[test]
    fn deterministic_given_rng_stream() {
        let g = Gaussian::standard(1);
        let cfg = McConfig {
            samples: 64,
            chain_iterations: 16,
            step: 0.05,
        };
        let x = DVector::from_element(1, 0.7);
        let a = mc_score_at_lambda(&g, &x, 0.7, &cfg, &mut ChaCha8Rng::seed_from_u64(5))
            .unwrap()
            .0;
        let b = mc_score_at_lambda(&g, &x, 0.7, &cfg, &mut ChaCha8Rng::seed_from_u64(5))
            .unwrap()
            .0;
        assert_eq!(a, b);
    }
}
