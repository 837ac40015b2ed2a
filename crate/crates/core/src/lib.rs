//! Langevin sampling toolkit built around annealing paths with closed-form
//! scores.
//!
//! The crate is organized in four layers:
//!
//! - [`model`]: Gaussians, Gaussian mixtures, their log-densities, scores and
//!   exact sampling, plus the product/convolution identities the path
//!   constructions rely on.
//! - [`paths`]: annealing schedules and the score providers for the dilation,
//!   geometric and convolutional (exact and Monte Carlo) paths, together with
//!   the cost model of the recursive windowed estimator.
//! - [`sampler`]: the unadjusted Langevin engine, plain or annealed over a
//!   path, with fixed, time-adaptive and position-adaptive step policies.
//! - [`metrics`]: convergence diagnostics between a particle cloud and the
//!   target (KSD, MMD, k-NN KL, entropic W2, multimodality score).

pub mod error;
pub mod metrics;
pub mod model;
pub mod paths;
pub mod sampler;

pub use error::{Error, Result};
