//! Unadjusted Langevin engines: plain runs against a fixed target and
//! annealed runs that follow a path of distributions.
//!
//! The update is `x_{k+1} = x_k + h_k ∇log μ_k(x_k) + √(2 h_k) ε_k`. Schedule
//! time advances by the base step only, `t_k = k·h`, so the annealing horizon
//! does not depend on per-particle step adaptation.
//!
//! Every particle owns a counter-based RNG stream derived from
//! `(master seed, particle index)`, which makes runs bit-identical for any
//! degree of parallelism.

use std::time::Instant;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Gaussian, TargetDensity};
use crate::paths::{PathScore, Schedule};

/// Step-size policy for the Langevin drift.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StepPolicy {
    /// Constant `h`.
    Fixed { step: f64 },
    /// `h / mean‖score‖²` over the current cloud, the usual proxy for
    /// `1/E[‖∇log μ_k‖²]`.
    TimeAdaptive { step: f64 },
    /// `h / max(c, ‖score‖)`: position-dependent, with the bound `c` keeping
    /// the denominator away from zero. With `c = 1` the drift term is capped
    /// at `h`.
    PositionAdaptive { step: f64, bound: f64 },
}

impl StepPolicy {
    pub fn base_step(&self) -> f64 {
        match self {
            StepPolicy::Fixed { step }
            | StepPolicy::TimeAdaptive { step }
            | StepPolicy::PositionAdaptive { step, .. } => *step,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let h = self.base_step();
        if !h.is_finite() || h <= 0.0 {
            return Err(Error::input("step size must be > 0"));
        }
        if let StepPolicy::PositionAdaptive { bound, .. } = self {
            if !bound.is_finite() || *bound <= 0.0 {
                return Err(Error::input("position-adaptive bound must be > 0"));
            }
        }
        Ok(())
    }
}

/// Effective step size for one particle.
///
/// `cloud_mean_sq` is the mean squared score norm over the current cloud; it
/// is only consumed by the time-adaptive policy (the denominator is floored
/// to keep the result finite on degenerate clouds).
pub fn effective_step(policy: &StepPolicy, score: &DVector<f64>, cloud_mean_sq: f64) -> f64 {
    match policy {
        StepPolicy::Fixed { step } => *step,
        StepPolicy::TimeAdaptive { step } => step / cloud_mean_sq.max(1e-12),
        StepPolicy::PositionAdaptive { step, bound } => step / bound.max(score.norm()),
    }
}

/// One unadjusted Langevin update: `x + h·score + √(2h)·noise`.
pub fn ula_step(x: &DVector<f64>, score: &DVector<f64>, h: f64, noise: &DVector<f64>) -> DVector<f64> {
    let noise_scale = (2.0 * h).sqrt();
    let mut out = x.clone();
    for a in 0..out.len() {
        out[a] += h * score[a] + noise_scale * noise[a];
    }
    out
}

/// Particle initialization.
#[derive(Debug, Clone)]
pub enum Init {
    /// All particles exactly at the origin (Dirac proposal).
    DiracAtOrigin,
    Gaussian(Gaussian),
    Uniform { low: Vec<f64>, high: Vec<f64> },
}

/// Configuration of a sampling run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub particles: usize,
    pub iterations: usize,
    pub policy: StepPolicy,
    pub schedule: Schedule,
    pub init: Init,
    /// Checkpoints are emitted at k = 0, every `checkpoint_stride`
    /// iterations, and at the final iteration.
    pub checkpoint_stride: usize,
    pub seed: u64,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.particles == 0 {
            return Err(Error::input("need at least one particle"));
        }
        if self.checkpoint_stride == 0 {
            return Err(Error::input("checkpoint stride must be >= 1"));
        }
        self.policy.validate()?;
        self.schedule.validate()?;
        if let Init::Uniform { low, high } = &self.init {
            if low.len() != high.len() {
                return Err(Error::dim(low.len(), high.len()));
            }
            if low.iter().zip(high).any(|(l, h)| !(l < h)) {
                return Err(Error::input("uniform init needs low < high per coordinate"));
            }
        }
        Ok(())
    }
}

/// Cloud snapshot emitted along a run.
#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub iteration: usize,
    /// Schedule time `t = k·h`.
    pub time: f64,
    /// Annealing level the last step used (1 for plain runs).
    pub lambda: f64,
    pub positions: Vec<DVector<f64>>,
    /// Cumulative target-score queries up to this iteration.
    pub score_queries: u64,
    pub wall_time_ms: u64,
}

/// Counter-based per-stream RNG: one master seed, one stream id.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Stream id reserved for consumers that need draws outside the particle
/// streams (e.g. reference samples for evaluation); never used by the engine.
pub const AUX_STREAM: u64 = u64::MAX;

/// Annealed Langevin run over `path`, with λ driven by the config schedule.
pub fn run_annealed(config: &RunConfig, path: &PathScore<'_>) -> Result<Vec<Checkpoint>> {
    run_impl(config, path, false)
}

/// Plain unadjusted Langevin run: the score is the target score throughout
/// (λ fixed to 1, the schedule is ignored).
pub fn run_plain(config: &RunConfig, target: &dyn TargetDensity) -> Result<Vec<Checkpoint>> {
    run_impl(config, &PathScore::Target { target }, true)
}

fn run_impl(config: &RunConfig, path: &PathScore<'_>, plain: bool) -> Result<Vec<Checkpoint>> {
    config.validate()?;
    path.validate()?;
    if path.requires_dirac_init() && !matches!(config.init, Init::DiracAtOrigin) {
        return Err(Error::input(
            "dilation path requires dirac_at_origin initialization",
        ));
    }
    let d = path.dim();
    let n = config.particles;
    let h = config.policy.base_step();
    let start = Instant::now();

    let mut rngs: Vec<ChaCha8Rng> = (0..n).map(|i| stream_rng(config.seed, i as u64)).collect();
    let mut positions: Vec<DVector<f64>> = match &config.init {
        Init::DiracAtOrigin => (0..n).map(|_| DVector::zeros(d)).collect(),
        Init::Gaussian(g) => {
            if g.dim() != d {
                return Err(Error::dim(d, g.dim()));
            }
            rngs.iter_mut().map(|rng| g.sample(rng)).collect()
        }
        Init::Uniform { low, high } => {
            if low.len() != d {
                return Err(Error::dim(d, low.len()));
            }
            rngs.iter_mut()
                .map(|rng| {
                    DVector::from_fn(d, |a, _| rng.gen_range(low[a]..high[a]))
                })
                .collect()
        }
    };

    let mut checkpoints = Vec::with_capacity(config.iterations / config.checkpoint_stride + 2);
    let lambda0 = if plain { 1.0 } else { config.schedule.eval(0.0)? };
    let mut queries: u64 = 0;
    checkpoints.push(snapshot(0, 0.0, lambda0, &positions, queries, &start));

    let time_adaptive = matches!(config.policy, StepPolicy::TimeAdaptive { .. });
    for k in 1..=config.iterations {
        let t = k as f64 * h;
        let lambda = if plain { 1.0 } else { config.schedule.eval(t)? };
        let prepared = path.prepare(lambda)?;

        // Scores first: the time-adaptive policy needs the cloud statistic
        // before any particle moves.
        let evals: Vec<Result<DVector<f64>>> = positions
            .par_iter()
            .zip(rngs.par_iter_mut())
            .map(|(x, rng)| prepared.eval(x, rng))
            .collect();
        let mut scores = Vec::with_capacity(n);
        for e in evals {
            scores.push(e?);
        }
        queries += n as u64 * prepared.queries_per_eval();

        let mean_sq = if time_adaptive {
            scores.iter().map(|s| s.norm_squared()).sum::<f64>() / n as f64
        } else {
            0.0
        };

        positions
            .par_iter_mut()
            .zip(rngs.par_iter_mut())
            .zip(scores.par_iter())
            .for_each(|((x, rng), score)| {
                let h_eff = effective_step(&config.policy, score, mean_sq);
                let noise_scale = (2.0 * h_eff).sqrt();
                for a in 0..d {
                    x[a] += h_eff * score[a]
                        + noise_scale * rng.sample::<f64, _>(StandardNormal);
                }
            });

        // Sequential scan so an abort always names the lowest failing
        // particle, independent of thread interleaving.
        for (i, x) in positions.iter().enumerate() {
            if x.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite {
                    iteration: k,
                    index: i,
                });
            }
        }

        if k % config.checkpoint_stride == 0 || k == config.iterations {
            checkpoints.push(snapshot(k, t, lambda, &positions, queries, &start));
        }
    }
    Ok(checkpoints)
}

fn snapshot(
    iteration: usize,
    time: f64,
    lambda: f64,
    positions: &[DVector<f64>],
    score_queries: u64,
    start: &Instant,
) -> Checkpoint {
    Checkpoint {
        iteration,
        time,
        lambda,
        positions: positions.to_vec(),
        score_queries,
        wall_time_ms: start.elapsed().as_millis() as u64,
    }
}
