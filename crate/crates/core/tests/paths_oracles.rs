//! Path-level oracle checks: the dilation/convolutional closed forms against
//! each other and against the stochastic-interpolant construction, plus the
//! Monte Carlo estimator against exact scores.

mod support;

use anneal_core::model::{Gaussian, GaussianMixture};
use anneal_core::paths::{
    convolutional_gmm_path, dilation_score, interpolant_samples, mc_score_at_lambda, McConfig,
};
use nalgebra::DVector;
use rand::Rng;
use support::*;

#[test]
fn dilation_is_the_dirac_limit_of_the_convolutional_path() {
    // Σ₀ = 1e-12·I: scores must agree within 1e-6 relative at random (x, λ).
    let mut rng = rng(201);
    for _ in 0..100 {
        let gmm = random_mixture(2, 4, &mut rng);
        let dirac = Gaussian::isotropic(DVector::zeros(2), 1e-12).unwrap();
        let lambda: f64 = rng.gen_range(0.05..=1.0);
        let x = DVector::from_fn(2, |_, _| rng.gen_range(-4.0..4.0));
        let dil = dilation_score(&gmm, &x, lambda).unwrap();
        let conv = convolutional_gmm_path(&gmm, &dirac, lambda)
            .unwrap()
            .score(&x)
            .unwrap();
        let err = (&dil - &conv).norm() / dil.norm().max(1e-12);
        assert!(err < 1e-6, "relative gap {err} at lambda {lambda}");
    }
}

fn three_component_mixture() -> GaussianMixture {
    GaussianMixture::new(
        vec![
            Gaussian::isotropic(DVector::from_vec(vec![-2.0, 0.0]), 0.5).unwrap(),
            Gaussian::isotropic(DVector::from_vec(vec![1.5, 1.0]), 1.0).unwrap(),
            Gaussian::isotropic(DVector::from_vec(vec![0.5, -2.0]), 0.8).unwrap(),
        ],
        vec![0.25, 0.45, 0.3],
    )
    .unwrap()
}

#[test]
fn interpolant_samples_match_convolutional_moments() {
    // x = √(1-λ)·x_ν + √λ·x_π must have the closed-form mixture's mean and
    // covariance; checked within 3 standard errors.
    let gmm = three_component_mixture();
    let proposal = Gaussian::standard(2);
    let n = 20_000;
    let mut rng = rng(202);
    for &lambda in &[0.3, 0.7] {
        let samples = interpolant_samples(&gmm, Some(&proposal), lambda, n, &mut rng).unwrap();
        let (mean, cov) = empirical_moments(&samples);
        let (em, ec) = convolutional_gmm_path(&gmm, &proposal, lambda)
            .unwrap()
            .mean_and_covariance();
        for a in 0..2 {
            let se = (ec[(a, a)] / n as f64).sqrt();
            assert!(
                (mean[a] - em[a]).abs() < 3.0 * se,
                "mean[{a}] off at lambda {lambda}"
            );
        }
        for a in 0..2 {
            for b in 0..2 {
                // Conservative normal-theory standard error for covariances.
                let se =
                    ((ec[(a, a)] * ec[(b, b)] + ec[(a, b)] * ec[(a, b)]) / n as f64).sqrt() * 1.5;
                assert!(
                    (cov[(a, b)] - ec[(a, b)]).abs() < 3.0 * se,
                    "cov[{a},{b}] off at lambda {lambda}: {} vs {}",
                    cov[(a, b)],
                    ec[(a, b)]
                );
            }
        }
    }
}

#[test]
fn dirac_interpolant_matches_the_dilated_mixture() {
    let gmm = three_component_mixture();
    let n = 20_000;
    let mut rng = rng(203);
    let lambda = 0.4;
    let samples = interpolant_samples(&gmm, None, lambda, n, &mut rng).unwrap();
    let (mean, _) = empirical_moments(&samples);
    let (em, ec) = gmm.scaled(lambda.sqrt()).unwrap().mean_and_covariance();
    for a in 0..2 {
        let se = (ec[(a, a)] / n as f64).sqrt();
        assert!((mean[a] - em[a]).abs() < 3.0 * se);
    }
}

#[test]
fn mc_estimator_matches_the_exact_mixture_path_score() {
    // Mildly separated mixture keeps the blurred target log-concave enough
    // for the inner chain; compare against the Prop-style closed form.
    let gmm = GaussianMixture::new(
        vec![
            Gaussian::isotropic(DVector::from_vec(vec![-0.75, 0.0]), 1.0).unwrap(),
            Gaussian::isotropic(DVector::from_vec(vec![0.75, 0.4]), 1.0).unwrap(),
        ],
        vec![0.5, 0.5],
    )
    .unwrap();
    let proposal = Gaussian::standard(2);
    let mut rng = rng(204);
    for &lambda in &[0.6, 0.9] {
        let cfg = McConfig {
            samples: 10_000,
            chain_iterations: 60,
            step: 0.1 * (1.0 - lambda),
        };
        let x = DVector::from_vec(vec![1.2, -0.8]);
        let (est, stats) = mc_score_at_lambda(&gmm, &x, lambda, &cfg, &mut rng).unwrap();
        let exact = convolutional_gmm_path(&gmm, &proposal, lambda)
            .unwrap()
            .score(&x)
            .unwrap();
        let rel = (&est - &exact).norm() / exact.norm();
        assert!(
            rel < 0.05,
            "relative error {rel} at lambda {lambda} (exact {exact:?}, est {est:?})"
        );
        assert_eq!(stats.steps, 10_000 * 60);
    }
}

#[test]
fn mc_estimator_error_decays_with_sample_count() {
    // Smoke version of the O(1/√n) law on the standard-Gaussian target.
    let g = Gaussian::standard(2);
    let x = DVector::from_vec(vec![1.5, -1.0]);
    let mut rng = rng(205);
    let mut errs = Vec::new();
    for &n in &[100usize, 10_000] {
        let cfg = McConfig {
            samples: n,
            chain_iterations: 50,
            step: 0.1,
        };
        // Average the error norm over repeats to tame single-run noise.
        let reps = 3;
        let mut err = 0.0;
        for _ in 0..reps {
            let (est, _) = mc_score_at_lambda(&g, &x, 0.5, &cfg, &mut rng).unwrap();
            err += (&est + &x).norm();
        }
        errs.push(err / reps as f64);
    }
    // Two decades of n should shrink the error by clearly more than 3x.
    assert!(
        errs[1] < errs[0] / 3.0,
        "no decay: errors {errs:?}"
    );
}
