//! Oracles shared by the integration tests: finite differences, quadrature,
//! and random model generators. These stay independent of the library code
//! paths they are used to check.

#![allow(dead_code)]

use anneal_core::model::{Gaussian, GaussianMixture};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Central finite-difference gradient of a scalar function.
pub fn fd_gradient<F: Fn(&DVector<f64>) -> f64>(f: F, x: &DVector<f64>, h: f64) -> DVector<f64> {
    let d = x.len();
    DVector::from_fn(d, |a, _| {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[a] += h;
        xm[a] -= h;
        (f(&xp) - f(&xm)) / (2.0 * h)
    })
}

/// Composite Simpson rule on [lo, hi] with an even number of panels.
pub fn simpson<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, panels: usize) -> f64 {
    let n = if panels % 2 == 0 { panels } else { panels + 1 };
    let h = (hi - lo) / n as f64;
    let mut acc = f(lo) + f(hi);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(lo + i as f64 * h);
    }
    acc * h / 3.0
}

/// Random SPD matrix `A Aᵀ + jitter·I`.
pub fn random_spd(d: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let a = DMatrix::from_fn(d, d, |_, _| rng.gen_range(-1.0..1.0));
    &a * a.transpose() + DMatrix::from_diagonal_element(d, d, 0.3)
}

pub fn random_gaussian(d: usize, rng: &mut ChaCha8Rng) -> Gaussian {
    let mean = DVector::from_fn(d, |_, _| rng.gen_range(-3.0..3.0));
    Gaussian::new(mean, random_spd(d, rng)).unwrap()
}

/// Random mixture with 1..=max_components components in d dimensions.
pub fn random_mixture(d: usize, max_components: usize, rng: &mut ChaCha8Rng) -> GaussianMixture {
    let m = rng.gen_range(1..=max_components);
    let components = (0..m).map(|_| random_gaussian(d, rng)).collect();
    let raw: Vec<f64> = (0..m).map(|_| rng.gen_range(0.1..1.0)).collect();
    let sum: f64 = raw.iter().sum();
    let mut weights: Vec<f64> = raw.iter().map(|w| w / sum).collect();
    let adjust: f64 = 1.0 - weights.iter().sum::<f64>();
    weights[m - 1] += adjust;
    GaussianMixture::new(components, weights).unwrap()
}

/// Sample mean and covariance of a set of vectors.
pub fn empirical_moments(samples: &[DVector<f64>]) -> (DVector<f64>, DMatrix<f64>) {
    let n = samples.len();
    let d = samples[0].len();
    let mut mean = DVector::zeros(d);
    for x in samples {
        mean += x;
    }
    mean /= n as f64;
    let mut cov = DMatrix::zeros(d, d);
    for x in samples {
        let dx = x - &mean;
        cov += &dx * dx.transpose();
    }
    cov /= n as f64 - 1.0;
    (mean, cov)
}
