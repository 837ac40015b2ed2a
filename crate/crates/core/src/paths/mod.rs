//! Annealing schedules and path-score providers.
//!
//! A path is a family of distributions `μ_λ` interpolating a proposal
//! (λ = 0) and the target (λ = 1). The sampler only ever needs
//! `∇log μ_λ(x)`; the providers here give it for:
//!
//! - the dilation path `μ_λ(x) = λ^{-d/2} π(x/√λ)`, whose score is available
//!   in closed form for any target;
//! - the geometric path `μ_λ ∝ ν^{1-λ} π^λ`;
//! - the convolutional path, exactly for Gaussian-mixture targets (the path
//!   stays in the mixture family) and through a Monte Carlo estimator for
//!   general unnormalized targets.

use nalgebra::DVector;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Gaussian, GaussianMixture, TargetDensity};

mod cost;
mod mc;

pub use cost::{recursive_cost, RecursiveCostModel};
pub use mc::{convolutional_mc_score, mc_score_at_lambda, InnerChainStats, McConfig};

/// Map from algorithm time `t ≥ 0` to the annealing level `λ_t ∈ [0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Schedule {
    /// `λ_t = min(1, t)`.
    Linear,
    /// `λ_t = min(1, e^{-2(T - t)})`, initialized at `λ_0 = e^{-2T}`.
    Exponential { horizon: f64 },
}

impl Schedule {
    pub fn validate(&self) -> Result<()> {
        if let Schedule::Exponential { horizon } = self {
            if !horizon.is_finite() || *horizon <= 0.0 {
                return Err(Error::input("exponential schedule needs horizon T > 0"));
            }
        }
        Ok(())
    }

    /// `λ_t`, clamped to at most 1. Negative `t` is an input error.
    pub fn eval(&self, t: f64) -> Result<f64> {
        if !t.is_finite() || t < 0.0 {
            return Err(Error::input(format!("schedule time must be >= 0, got {t}")));
        }
        Ok(match self {
            Schedule::Linear => t.min(1.0),
            Schedule::Exponential { horizon } => (-2.0 * (horizon - t)).exp().min(1.0),
        })
    }
}

/// Dilation-path score: `∇log μ_λ(x) = (1/√λ) ∇log π(x/√λ)`.
///
/// The λ = 0 endpoint is a Dirac and has no finite score, so `λ ≤ 0` is
/// rejected.
pub fn dilation_score(target: &dyn TargetDensity, x: &DVector<f64>, lambda: f64) -> Result<DVector<f64>> {
    if !(lambda > 0.0) {
        return Err(Error::input(format!(
            "dilation score needs lambda > 0, got {lambda}"
        )));
    }
    let inv_sqrt = 1.0 / lambda.sqrt();
    let s = target.score(&(inv_sqrt * x))?;
    Ok(inv_sqrt * s)
}

/// Geometric-path score: `(1-λ) ∇log ν(x) + λ ∇log π(x)` for `μ_λ ∝ ν^{1-λ} π^λ`.
pub fn geometric_score(
    target: &dyn TargetDensity,
    proposal: &Gaussian,
    x: &DVector<f64>,
    lambda: f64,
) -> Result<DVector<f64>> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::input(format!(
            "geometric score needs lambda in [0, 1], got {lambda}"
        )));
    }
    if proposal.dim() != target.dim() {
        return Err(Error::dim(target.dim(), proposal.dim()));
    }
    let mut s = proposal.score(x)?;
    s *= 1.0 - lambda;
    if lambda > 0.0 {
        s += lambda * target.score(x)?;
    }
    Ok(s)
}

/// The convolutional path of a Gaussian mixture stays in the mixture family:
/// weights unchanged, means `√λ μ_m`, covariances `(1-λ) Σ_0 + λ Σ_m`.
///
/// The proposal must be centered at zero; a Dirac proposal is obtained in the
/// `Σ_0 → 0` limit, leaving covariances `λ Σ_m`.
pub fn convolutional_gmm_path(
    gmm: &GaussianMixture,
    proposal: &Gaussian,
    lambda: f64,
) -> Result<GaussianMixture> {
    if proposal.dim() != gmm.dim() {
        return Err(Error::dim(gmm.dim(), proposal.dim()));
    }
    if proposal.mean().iter().any(|v| *v != 0.0) {
        return Err(Error::input(
            "convolutional path needs a zero-mean proposal",
        ));
    }
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::input(format!(
            "convolutional path needs lambda in [0, 1], got {lambda}"
        )));
    }
    let sqrt_lambda = lambda.sqrt();
    let components = gmm
        .components()
        .iter()
        .map(|c| {
            Gaussian::new(
                sqrt_lambda * c.mean(),
                (1.0 - lambda) * proposal.covariance() + lambda * c.covariance(),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    GaussianMixture::new(components, gmm.weights().to_vec())
}

/// Draws `n` stochastic-interpolant samples `x = √(1-λ) x_ν + √λ x_π`.
///
/// A `None` proposal is the Dirac case, `x = √λ x_π`.
pub fn interpolant_samples(
    target: &GaussianMixture,
    proposal: Option<&Gaussian>,
    lambda: f64,
    n: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<DVector<f64>>> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::input(format!(
            "interpolant needs lambda in [0, 1], got {lambda}"
        )));
    }
    if let Some(p) = proposal {
        if p.dim() != target.dim() {
            return Err(Error::dim(target.dim(), p.dim()));
        }
    }
    let a = (1.0 - lambda).sqrt();
    let b = lambda.sqrt();
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let x_pi = &target.sample(1, rng)[0];
        let mut x = b * x_pi;
        if let Some(p) = proposal {
            x += a * p.sample(rng);
        }
        out.push(x);
    }
    Ok(out)
}

/// A path descriptor bound to its target: evaluates `∇log μ_λ(x)`.
///
/// `Target` is the degenerate "no path" case used by plain (non-annealed)
/// Langevin runs; it ignores λ.
pub enum PathScore<'a> {
    Dilation {
        target: &'a dyn TargetDensity,
    },
    Geometric {
        target: &'a dyn TargetDensity,
        proposal: Gaussian,
    },
    /// Exact convolutional path; requires a Gaussian-mixture target.
    ConvolutionalExact {
        target: &'a GaussianMixture,
        proposal: Gaussian,
    },
    /// Monte Carlo convolutional score estimator with a standard-Gaussian
    /// proposal.
    ConvolutionalMc {
        target: &'a dyn TargetDensity,
        config: McConfig,
    },
    Target {
        target: &'a dyn TargetDensity,
    },
}

impl<'a> PathScore<'a> {
    pub fn dim(&self) -> usize {
        match self {
            PathScore::Dilation { target } => target.dim(),
            PathScore::Geometric { target, .. } => target.dim(),
            PathScore::ConvolutionalExact { target, .. } => target.dim(),
            PathScore::ConvolutionalMc { target, .. } => target.dim(),
            PathScore::Target { target } => target.dim(),
        }
    }

    /// The dilation path is the Dirac-proposal path: runs over it must start
    /// from a Dirac at the origin.
    pub fn requires_dirac_init(&self) -> bool {
        matches!(self, PathScore::Dilation { .. })
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            PathScore::Geometric { target, proposal } => {
                if proposal.dim() != target.dim() {
                    return Err(Error::dim(target.dim(), proposal.dim()));
                }
            }
            PathScore::ConvolutionalExact { target, proposal } => {
                if proposal.dim() != target.dim() {
                    return Err(Error::dim(target.dim(), proposal.dim()));
                }
                if proposal.mean().iter().any(|v| *v != 0.0) {
                    return Err(Error::input(
                        "convolutional path needs a zero-mean proposal",
                    ));
                }
            }
            PathScore::ConvolutionalMc { config, .. } => config.validate()?,
            _ => {}
        }
        Ok(())
    }

    /// Binds the path at a fixed λ so per-iteration work (e.g. building the
    /// exact-path mixture) happens once per level, not once per particle.
    pub fn prepare(&self, lambda: f64) -> Result<PreparedScore<'_>> {
        match self {
            PathScore::Dilation { target } => {
                if !(lambda > 0.0) {
                    return Err(Error::input(format!(
                        "dilation score needs lambda > 0, got {lambda}"
                    )));
                }
                Ok(PreparedScore::Dilation {
                    target: *target,
                    inv_sqrt_lambda: 1.0 / lambda.sqrt(),
                })
            }
            PathScore::Geometric { target, proposal } => Ok(PreparedScore::Geometric {
                target: *target,
                proposal,
                lambda,
            }),
            PathScore::ConvolutionalExact { target, proposal } => {
                Ok(PreparedScore::Mixture {
                    mixture: convolutional_gmm_path(target, proposal, lambda)?,
                })
            }
            PathScore::ConvolutionalMc { target, config } => Ok(PreparedScore::Mc {
                target: *target,
                config: *config,
                lambda,
            }),
            PathScore::Target { target } => Ok(PreparedScore::Target { target: *target }),
        }
    }
}

/// A path score pinned at one annealing level.
pub enum PreparedScore<'a> {
    Dilation {
        target: &'a dyn TargetDensity,
        inv_sqrt_lambda: f64,
    },
    Geometric {
        target: &'a dyn TargetDensity,
        proposal: &'a Gaussian,
        lambda: f64,
    },
    Mixture {
        mixture: GaussianMixture,
    },
    Mc {
        target: &'a dyn TargetDensity,
        config: McConfig,
        lambda: f64,
    },
    Target {
        target: &'a dyn TargetDensity,
    },
}

impl PreparedScore<'_> {
    /// `∇log μ_λ(x)`. The RNG is consumed only by the Monte Carlo variant.
    pub fn eval(&self, x: &DVector<f64>, rng: &mut ChaCha8Rng) -> Result<DVector<f64>> {
        match self {
            PreparedScore::Dilation {
                target,
                inv_sqrt_lambda,
            } => {
                let s = target.score(&(*inv_sqrt_lambda * x))?;
                Ok(*inv_sqrt_lambda * s)
            }
            PreparedScore::Geometric {
                target,
                proposal,
                lambda,
            } => geometric_score(*target, proposal, x, *lambda),
            PreparedScore::Mixture { mixture } => mixture.score(x),
            PreparedScore::Mc {
                target,
                config,
                lambda,
            } => {
                // λ = 1 is the exact endpoint: the path equals the target.
                if *lambda >= 1.0 {
                    return target.score(x);
                }
                Ok(mc_score_at_lambda(*target, x, *lambda, config, rng)?.0)
            }
            PreparedScore::Target { target } => target.score(x),
        }
    }

    /// Number of target-score queries a single evaluation costs.
    pub fn queries_per_eval(&self) -> u64 {
        match self {
            PreparedScore::Mc { config, .. } => {
                config.samples as u64 * config.chain_iterations as u64
            }
            _ => 1,
        }
    }
}
