//! Oracle checks for the Gaussian identities: every closed-form parameter
//! rule is verified against quadrature or finite differences, independent of
//! the code path it checks.

mod support;

use anneal_core::model::{gaussian_convolve, gaussian_product, Gaussian, GaussianMixture};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use support::*;

fn gaussian_1d(mean: f64, var: f64) -> Gaussian {
    Gaussian::new(DVector::from_element(1, mean), DMatrix::from_element(1, 1, var)).unwrap()
}

fn density_1d(g: &Gaussian, x: f64) -> f64 {
    g.log_density(&DVector::from_element(1, x)).unwrap().exp()
}

#[test]
fn product_normalizer_matches_quadrature_on_random_draws() {
    let mut rng = rng(101);
    for _ in 0..50 {
        let a = gaussian_1d(rng.gen_range(-2.0..2.0), rng.gen_range(0.2..3.0));
        let b = gaussian_1d(rng.gen_range(-2.0..2.0), rng.gen_range(0.2..3.0));
        let (_, log_norm) = gaussian_product(&a, &b).unwrap();

        let lo = (a.mean()[0].min(b.mean()[0])) - 12.0 * 3.0f64.sqrt();
        let hi = (a.mean()[0].max(b.mean()[0])) + 12.0 * 3.0f64.sqrt();
        let mass = simpson(|x| density_1d(&a, x) * density_1d(&b, x), lo, hi, 4000);
        assert!(
            (log_norm.exp() - mass).abs() <= 1e-6 * mass.max(1e-6),
            "normalizer {} vs quadrature {}",
            log_norm.exp(),
            mass
        );
    }
}

#[test]
fn product_moments_match_quadrature() {
    // N(0,1)·N(2,3): the full parameter set against brute-force integrals.
    let a = gaussian_1d(0.0, 1.0);
    let b = gaussian_1d(2.0, 3.0);
    let (p, log_norm) = gaussian_product(&a, &b).unwrap();
    let f = |x: f64| density_1d(&a, x) * density_1d(&b, x);
    let mass = simpson(f, -20.0, 22.0, 8000);
    let mean = simpson(|x| x * f(x), -20.0, 22.0, 8000) / mass;
    let var = simpson(|x| (x - mean) * (x - mean) * f(x), -20.0, 22.0, 8000) / mass;
    assert!((log_norm.exp() - mass).abs() < 1e-6);
    assert!((p.mean()[0] - mean).abs() < 1e-6, "{} vs {}", p.mean()[0], mean);
    assert!((p.covariance()[(0, 0)] - var).abs() < 1e-6);
}

#[test]
fn product_identity_holds_pointwise_in_higher_dimensions() {
    // log N_a(x) + log N_b(x) = log_norm + log N_prod(x) at random points.
    let mut rng = rng(102);
    for &d in &[1usize, 2, 3] {
        for _ in 0..20 {
            let a = random_gaussian(d, &mut rng);
            let b = random_gaussian(d, &mut rng);
            let (p, log_norm) = gaussian_product(&a, &b).unwrap();
            for _ in 0..50 {
                let x = DVector::from_fn(d, |_, _| rng.gen_range(-4.0..4.0));
                let lhs = a.log_density(&x).unwrap() + b.log_density(&x).unwrap();
                let rhs = log_norm + p.log_density(&x).unwrap();
                assert!(
                    (lhs - rhs).abs() < 1e-8,
                    "pointwise product identity off by {}",
                    lhs - rhs
                );
            }
        }
    }
}

#[test]
fn convolution_density_matches_quadrature() {
    let mut rng = rng(103);
    for _ in 0..50 {
        let a = gaussian_1d(rng.gen_range(-2.0..2.0), rng.gen_range(0.2..2.5));
        let b = gaussian_1d(rng.gen_range(-2.0..2.0), rng.gen_range(0.2..2.5));
        let c = gaussian_convolve(&a, &b).unwrap();
        let z = rng.gen_range(-4.0..4.0);
        // (f * g)(z) = ∫ f(x) g(z - x) dx
        let direct = simpson(|x| density_1d(&a, x) * density_1d(&b, z - x), -30.0, 30.0, 6000);
        let closed = density_1d(&c, z);
        assert!(
            (direct - closed).abs() < 1e-6,
            "convolution at {z}: {direct} vs {closed}"
        );
    }
}

#[test]
fn convolution_matches_sum_of_independent_draws() {
    // Monte Carlo oracle: moments of X + Y against N(0, 5).
    let a = gaussian_1d(1.0, 2.0);
    let b = gaussian_1d(-1.0, 3.0);
    let c = gaussian_convolve(&a, &b).unwrap();
    let mut rng = rng(104);
    let n = 200_000;
    let sums: Vec<DVector<f64>> = (0..n)
        .map(|_| a.sample(&mut rng) + b.sample(&mut rng))
        .collect();
    let (mean, cov) = empirical_moments(&sums);
    let se_mean = (5.0f64 / n as f64).sqrt();
    assert!((mean[0] - c.mean()[0]).abs() < 3.0 * se_mean);
    let se_var = 5.0 * (2.0 / n as f64).sqrt();
    assert!((cov[(0, 0)] - c.covariance()[(0, 0)]).abs() < 3.0 * se_var);
}

#[test]
fn scaling_identity_against_both_evaluation_routes() {
    // N(x/a; μ, Σ) = |a|^d N(x; aμ, a²Σ)
    let mut rng = rng(105);
    for &d in &[1usize, 2, 3] {
        for _ in 0..17 {
            let g = random_gaussian(d, &mut rng);
            let a: f64 = rng.gen_range(0.2..2.5);
            let scaled = g.scaled(a).unwrap();
            let x = DVector::from_fn(d, |_, _| rng.gen_range(-3.0..3.0));
            let lhs = g.log_density(&(&x / a)).unwrap();
            let rhs = (d as f64) * a.abs().ln() + scaled.log_density(&x).unwrap();
            assert!((lhs - rhs).abs() < 1e-6, "scaling identity off by {}", lhs - rhs);
        }
    }
}

#[test]
fn shift_identity() {
    // N(x - a; μ, Σ) = N(x; μ + a, Σ)
    let mut rng = rng(106);
    for _ in 0..50 {
        let g = random_gaussian(2, &mut rng);
        let shift = DVector::from_fn(2, |_, _| rng.gen_range(-2.0..2.0));
        let shifted = g.shifted(&shift).unwrap();
        let x = DVector::from_fn(2, |_, _| rng.gen_range(-3.0..3.0));
        let lhs = g.log_density(&(&x - &shift)).unwrap();
        let rhs = shifted.log_density(&x).unwrap();
        assert!((lhs - rhs).abs() < 1e-9);
    }
}

#[test]
fn interchangeability_of_argument_and_mean() {
    let mut rng = rng(107);
    for _ in 0..50 {
        let cov = random_spd(2, &mut rng);
        let mu = DVector::from_fn(2, |_, _| rng.gen_range(-3.0..3.0));
        let x = DVector::from_fn(2, |_, _| rng.gen_range(-3.0..3.0));
        let at_x = Gaussian::new(mu.clone(), cov.clone()).unwrap().log_density(&x).unwrap();
        let swapped = Gaussian::new(x, cov).unwrap().log_density(&mu).unwrap();
        assert!((at_x - swapped).abs() < 1e-12);
    }
}

#[test]
fn gradient_identity_against_finite_differences() {
    // ∇N(x) = -Σ⁻¹(x-μ)·N(x), checked on the density itself.
    let mut rng = rng(108);
    for _ in 0..50 {
        let g = random_gaussian(2, &mut rng);
        let x = DVector::from_fn(2, |_, _| rng.gen_range(-3.0..3.0));
        let density = |y: &DVector<f64>| g.log_density(y).unwrap().exp();
        let fd = fd_gradient(density, &x, 1e-5);
        let closed = g.score(&x).unwrap() * density(&x);
        for a in 0..2 {
            assert!(
                (fd[a] - closed[a]).abs() < 1e-6,
                "gradient identity off by {}",
                fd[a] - closed[a]
            );
        }
    }
}

#[test]
fn scores_match_finite_differences_of_log_density() {
    // TargetDensity contract at 100 random points, both implementations.
    let mut rng = rng(109);
    for i in 0..100 {
        let d = 1 + (i % 3);
        let mixture = random_mixture(d, 3, &mut rng);
        let x = DVector::from_fn(d, |_, _| rng.gen_range(-4.0..4.0));
        let s = mixture.score(&x).unwrap();
        let fd = fd_gradient(|y| mixture.log_density(y).unwrap(), &x, 1e-6);
        let err = (&s - &fd).norm();
        assert!(
            err <= 1e-5 * (1.0 + s.norm()),
            "score error {err} at point {i}"
        );
    }
}

#[test]
fn mixture_density_integrates_to_one_on_grids() {
    // d = 1
    let mut rng = rng(110);
    let gmm = random_mixture(1, 3, &mut rng);
    let mass = simpson(
        |x| gmm.log_density(&DVector::from_element(1, x)).unwrap().exp(),
        -40.0,
        40.0,
        4000,
    );
    assert!((mass - 1.0).abs() < 1e-3, "1d mass = {mass}");

    // d = 2, trapezoid over a wide box
    let gmm = random_mixture(2, 2, &mut rng);
    let (lo, hi, steps) = (-24.0, 24.0, 480usize);
    let h = (hi - lo) / steps as f64;
    let mut mass2 = 0.0;
    for i in 0..=steps {
        for j in 0..=steps {
            let x = DVector::from_vec(vec![lo + i as f64 * h, lo + j as f64 * h]);
            let w_i = if i == 0 || i == steps { 0.5 } else { 1.0 };
            let w_j = if j == 0 || j == steps { 0.5 } else { 1.0 };
            mass2 += w_i * w_j * gmm.log_density(&x).unwrap().exp();
        }
    }
    mass2 *= h * h;
    assert!((mass2 - 1.0).abs() < 1e-3, "2d mass = {mass2}");
}

#[test]
fn responsibilities_nonnegative_and_normalized_on_random_mixtures() {
    let mut rng = rng(111);
    for _ in 0..40 {
        let gmm = random_mixture(2, 4, &mut rng);
        let x = DVector::from_fn(2, |_, _| rng.gen_range(-6.0..6.0));
        let r = gmm.responsibilities(&x).unwrap();
        assert!(r.iter().all(|v| *v >= 0.0));
        assert!((r.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
    }
}

#[test]
fn mixture_serde_round_trip_preserves_evaluations() {
    let mut rng = rng(112);
    let gmm = random_mixture(2, 3, &mut rng);
    let text = serde_json::to_string(&gmm).unwrap();
    let back: GaussianMixture = serde_json::from_str(&text).unwrap();
    for _ in 0..20 {
        let x = DVector::from_fn(2, |_, _| rng.gen_range(-4.0..4.0));
        assert!(
            (gmm.log_density(&x).unwrap() - back.log_density(&x).unwrap()).abs() < 1e-12
        );
    }
}
