//! Probability-model primitives: Gaussians, Gaussian mixtures, their
//! log-densities, scores and exact sampling, plus the Gaussian algebra
//! identities (product, convolution, scaling, shift) used by the path
//! constructions.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

mod json;

pub use json::{CovarianceJson, GaussianJson, MixtureJson};

/// Relative tolerance of the symmetry check at construction.
const SYMMETRY_TOL: f64 = 1e-9;
/// Mixture weights must sum to one within this tolerance.
const WEIGHT_SUM_TOL: f64 = 1e-12;

const LN_2PI: f64 = 1.8378770664093453;

/// A distribution known through its log-density and score.
///
/// The log-density may be unnormalized: everything downstream (Langevin
/// drift, Stein kernels) only consumes the score, which is invariant to the
/// normalizing constant.
pub trait TargetDensity: Send + Sync {
    fn dim(&self) -> usize;

    /// log-density at `x`, up to an additive constant.
    fn log_density(&self, x: &DVector<f64>) -> Result<f64>;

    /// Gradient of the log-density at `x`.
    fn score(&self, x: &DVector<f64>) -> Result<DVector<f64>>;
}

/// Multivariate Gaussian with an SPD covariance.
///
/// The Cholesky factor and precision matrix are computed once at
/// construction: every density or score evaluation needs a solve, so we
/// factor a single time.
#[derive(Debug, Clone)]
pub struct Gaussian {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
    chol_l: DMatrix<f64>,
    precision: DMatrix<f64>,
    /// -(d/2)·ln(2π) - (1/2)·ln|Σ|
    log_norm: f64,
}

impl Gaussian {
    /// Builds a Gaussian, checking that the covariance is square, symmetric
    /// and positive-definite (via Cholesky success).
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let d = mean.len();
        if d == 0 {
            return Err(Error::input("Gaussian dimension must be at least 1"));
        }
        if cov.nrows() != d || cov.ncols() != d {
            return Err(Error::dim(d, cov.nrows().max(cov.ncols())));
        }
        let scale = cov.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1.0);
        for i in 0..d {
            for j in (i + 1)..d {
                if (cov[(i, j)] - cov[(j, i)]).abs() > SYMMETRY_TOL * scale {
                    return Err(Error::NotPositiveDefinite(format!(
                        "asymmetric entry at ({i}, {j})"
                    )));
                }
            }
        }
        let chol = nalgebra::Cholesky::new(cov.clone()).ok_or_else(|| {
            Error::NotPositiveDefinite("Cholesky factorization failed".to_string())
        })?;
        let chol_l = chol.l();
        let log_det: f64 = chol_l.diagonal().iter().map(|v| v.ln()).sum::<f64>() * 2.0;
        let precision = chol.inverse();
        let log_norm = -0.5 * (d as f64) * LN_2PI - 0.5 * log_det;
        Ok(Self {
            mean,
            cov,
            chol_l,
            precision,
            log_norm,
        })
    }

    /// Isotropic Gaussian `N(mean, var·I)`.
    pub fn isotropic(mean: DVector<f64>, var: f64) -> Result<Self> {
        let d = mean.len();
        Self::new(mean, DMatrix::from_diagonal_element(d, d, var))
    }

    /// Standard Gaussian `N(0, I)` in `dim` dimensions.
    pub fn standard(dim: usize) -> Self {
        Self::isotropic(DVector::zeros(dim), 1.0).expect("standard Gaussian is SPD")
    }

    /// Gaussian with a diagonal covariance given by `vars`.
    pub fn diagonal(mean: DVector<f64>, vars: &[f64]) -> Result<Self> {
        if mean.len() != vars.len() {
            return Err(Error::dim(mean.len(), vars.len()));
        }
        let cov = DMatrix::from_diagonal(&DVector::from_row_slice(vars));
        Self::new(mean, cov)
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn precision(&self) -> &DMatrix<f64> {
        &self.precision
    }

    fn check_dim(&self, x: &DVector<f64>) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::dim(self.dim(), x.len()));
        }
        Ok(())
    }

    /// `(x - μ)ᵀ Σ⁻¹ (x - μ)` without allocating.
    fn quad_form_centered(&self, dx: &DVector<f64>) -> f64 {
        let d = dx.len();
        let mut q = 0.0;
        for a in 0..d {
            let mut row = 0.0;
            for b in 0..d {
                row += self.precision[(a, b)] * dx[b];
            }
            q += dx[a] * row;
        }
        q
    }

    /// Squared Mahalanobis distance of `x` to the mean.
    pub fn mahalanobis_sq(&self, x: &DVector<f64>) -> Result<f64> {
        self.check_dim(x)?;
        let dx = x - &self.mean;
        Ok(self.quad_form_centered(&dx))
    }

    /// Normalized log-density.
    pub fn log_density(&self, x: &DVector<f64>) -> Result<f64> {
        Ok(self.log_norm - 0.5 * self.mahalanobis_sq(x)?)
    }

    /// Score `-Σ⁻¹ (x - μ)`.
    pub fn score(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_dim(x)?;
        let dx = x - &self.mean;
        let d = dx.len();
        let mut out = DVector::zeros(d);
        for a in 0..d {
            let mut row = 0.0;
            for b in 0..d {
                row += self.precision[(a, b)] * dx[b];
            }
            out[a] = -row;
        }
        Ok(out)
    }

    /// One exact draw via the cached Cholesky factor.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        let d = self.dim();
        let z = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
        &self.mean + &self.chol_l * z
    }

    /// The Gaussian of `a·X` for `X ~ self`: `N(a·μ, a²·Σ)`.
    ///
    /// Satisfies the dilation identity
    /// `N(x/a; μ, Σ) = |a|^d · N(x; a·μ, a²·Σ)`.
    pub fn scaled(&self, a: f64) -> Result<Self> {
        if a == 0.0 || !a.is_finite() {
            return Err(Error::input("scaling factor must be finite and nonzero"));
        }
        Self::new(a * &self.mean, (a * a) * &self.cov)
    }

    /// The Gaussian of `X + shift`: `N(μ + a, Σ)`.
    pub fn shifted(&self, shift: &DVector<f64>) -> Result<Self> {
        self.check_dim(shift)?;
        Self::new(&self.mean + shift, self.cov.clone())
    }
}

impl TargetDensity for Gaussian {
    fn dim(&self) -> usize {
        self.dim()
    }

    fn log_density(&self, x: &DVector<f64>) -> Result<f64> {
        Gaussian::log_density(self, x)
    }

    fn score(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        Gaussian::score(self, x)
    }
}

/// Parameters of the normalized pointwise product of two Gaussian densities,
/// plus the log of the normalization constant:
///
/// `N(x; μ_a, Σ_a) · N(x; μ_b, Σ_b) = exp(log_norm) · N(x; μ, Σ)`
///
/// with `Σ = Σ_a (Σ_a + Σ_b)⁻¹ Σ_b`, `μ = Σ_b (Σ_a+Σ_b)⁻¹ μ_a + Σ_a (Σ_a+Σ_b)⁻¹ μ_b`
/// (the precision-weighted combination) and `log_norm = log N(μ_a; μ_b, Σ_a + Σ_b)`.
pub fn gaussian_product(a: &Gaussian, b: &Gaussian) -> Result<(Gaussian, f64)> {
    if a.dim() != b.dim() {
        return Err(Error::dim(a.dim(), b.dim()));
    }
    let sum = &a.cov + &b.cov;
    let sum_gaussian = Gaussian::new(b.mean.clone(), sum)?;
    let log_norm = sum_gaussian.log_density(&a.mean)?;

    // Solve (Σ_a + Σ_b) Z = Σ_b  =>  Σ_a Z = Σ_a (Σ_a+Σ_b)⁻¹ Σ_b is the product
    // covariance; the same solve combines the means.
    let chol = nalgebra::Cholesky::new(&a.cov + &b.cov)
        .ok_or_else(|| Error::NotPositiveDefinite("sum of covariances".to_string()))?;
    let z = chol.solve(&b.cov);
    let cov = &a.cov * &z;
    // Symmetrize against roundoff before re-factoring.
    let cov = 0.5 * (&cov + cov.transpose());
    let w_a = chol.solve(&a.mean); // (Σ_a+Σ_b)⁻¹ μ_a
    let w_b = chol.solve(&b.mean);
    let mean = &b.cov * w_a + &a.cov * w_b;
    Ok((Gaussian::new(mean, cov)?, log_norm))
}

/// Parameters of the convolution of two Gaussians: `N(μ_a + μ_b, Σ_a + Σ_b)`.
pub fn gaussian_convolve(a: &Gaussian, b: &Gaussian) -> Result<Gaussian> {
    if a.dim() != b.dim() {
        return Err(Error::dim(a.dim(), b.dim()));
    }
    Gaussian::new(&a.mean + &b.mean, &a.cov + &b.cov)
}

/// Finite mixture of Gaussians with positive weights summing to one.
#[derive(Debug, Clone)]
pub struct GaussianMixture {
    components: Vec<Gaussian>,
    weights: Vec<f64>,
    log_weights: Vec<f64>,
}

impl GaussianMixture {
    pub fn new(components: Vec<Gaussian>, weights: Vec<f64>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::input("mixture needs at least one component"));
        }
        if components.len() != weights.len() {
            return Err(Error::InvalidWeights(format!(
                "{} components but {} weights",
                components.len(),
                weights.len()
            )));
        }
        let d = components[0].dim();
        for c in &components {
            if c.dim() != d {
                return Err(Error::dim(d, c.dim()));
            }
        }
        if weights.iter().any(|w| !w.is_finite() || *w <= 0.0) {
            return Err(Error::InvalidWeights(
                "weights must be positive and finite".to_string(),
            ));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::InvalidWeights(format!(
                "weights sum to {sum}, expected 1 within {WEIGHT_SUM_TOL:e}"
            )));
        }
        let log_weights = weights.iter().map(|w| w.ln()).collect();
        Ok(Self {
            components,
            weights,
            log_weights,
        })
    }

    /// Equal-weight mixture over `components`.
    pub fn equal_weights(components: Vec<Gaussian>) -> Result<Self> {
        let m = components.len();
        if m == 0 {
            return Err(Error::input("mixture needs at least one component"));
        }
        // Compensate the rounding of 1/m so the sum invariant holds exactly.
        let w = 1.0 / m as f64;
        let mut weights = vec![w; m];
        let sum: f64 = weights.iter().sum();
        weights[m - 1] += 1.0 - sum;
        Self::new(components, weights)
    }

    pub fn dim(&self) -> usize {
        self.components[0].dim()
    }

    pub fn num_components(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[Gaussian] {
        &self.components
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    fn check_dim(&self, x: &DVector<f64>) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::dim(self.dim(), x.len()));
        }
        Ok(())
    }

    /// Per-component joint log-densities `log w_m + log N(x; μ_m, Σ_m)`,
    /// written into `buf`.
    fn component_log_joint(&self, x: &DVector<f64>, buf: &mut Vec<f64>) {
        let d = self.dim();
        buf.clear();
        let mut dx = DVector::zeros(d);
        for (comp, lw) in self.components.iter().zip(&self.log_weights) {
            dx.copy_from(x);
            dx -= &comp.mean;
            let q = comp.quad_form_centered(&dx);
            buf.push(lw + comp.log_norm - 0.5 * q);
        }
    }

    /// `log Σ_m w_m N(x; μ_m, Σ_m)`, log-sum-exp stabilized.
    pub fn log_density(&self, x: &DVector<f64>) -> Result<f64> {
        self.check_dim(x)?;
        let mut logp = Vec::with_capacity(self.components.len());
        self.component_log_joint(x, &mut logp);
        Ok(log_sum_exp(&logp))
    }

    /// Posterior responsibilities `r_m(x)`, non-negative and summing to one.
    pub fn responsibilities(&self, x: &DVector<f64>) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        let mut logp = Vec::with_capacity(self.components.len());
        self.component_log_joint(x, &mut logp);
        let lse = log_sum_exp(&logp);
        Ok(logp.iter().map(|lp| (lp - lse).exp()).collect())
    }

    /// Score `Σ_m r_m(x) Σ_m⁻¹ (μ_m - x)` with log-sum-exp responsibilities.
    pub fn score(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_dim(x)?;
        let d = self.dim();
        let mut logp = Vec::with_capacity(self.components.len());
        self.component_log_joint(x, &mut logp);
        let lse = log_sum_exp(&logp);

        let mut out = DVector::zeros(d);
        let mut dx = DVector::zeros(d);
        for (comp, lp) in self.components.iter().zip(&logp) {
            let r = (lp - lse).exp();
            if r == 0.0 {
                continue;
            }
            dx.copy_from(x);
            dx -= &comp.mean;
            for a in 0..d {
                let mut row = 0.0;
                for b in 0..d {
                    row += comp.precision[(a, b)] * dx[b];
                }
                out[a] -= r * row;
            }
        }
        Ok(out)
    }

    /// `n` i.i.d. draws: categorical component choice, then a Cholesky draw.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<DVector<f64>> {
        (0..n)
            .map(|_| {
                let u: f64 = rng.gen();
                let mut acc = 0.0;
                let mut idx = self.components.len() - 1;
                for (m, w) in self.weights.iter().enumerate() {
                    acc += w;
                    if u < acc {
                        idx = m;
                        break;
                    }
                }
                self.components[idx].sample(rng)
            })
            .collect()
    }

    /// Mixture of the scaled components: the law of `a·X` for `X ~ self`
    /// (means `a·μ_m`, covariances `a²·Σ_m`, weights unchanged).
    pub fn scaled(&self, a: f64) -> Result<Self> {
        let components = self
            .components
            .iter()
            .map(|c| c.scaled(a))
            .collect::<Result<Vec<_>>>()?;
        Self::new(components, self.weights.clone())
    }

    /// Exact mixture mean and covariance:
    /// `μ = Σ w_m μ_m`, `Σ = Σ w_m (Σ_m + μ_m μ_mᵀ) - μ μᵀ`.
    pub fn mean_and_covariance(&self) -> (DVector<f64>, DMatrix<f64>) {
        let d = self.dim();
        let mut mean = DVector::zeros(d);
        for (c, w) in self.components.iter().zip(&self.weights) {
            mean += *w * &c.mean;
        }
        let mut cov = DMatrix::zeros(d, d);
        for (c, w) in self.components.iter().zip(&self.weights) {
            cov += *w * (&c.cov + &c.mean * c.mean.transpose());
        }
        cov -= &mean * mean.transpose();
        (mean, cov)
    }
}

impl TargetDensity for GaussianMixture {
    fn dim(&self) -> usize {
        self.dim()
    }

    fn log_density(&self, x: &DVector<f64>) -> Result<f64> {
        GaussianMixture::log_density(self, x)
    }

    fn score(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        GaussianMixture::score(self, x)
    }
}

/// Log-sum-exp of a non-empty slice, stable under large negative offsets.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().fold(f64::NEG_INFINITY, |a, &v| a.max(v));
    if !max.is_finite() {
        return max;
    }
    let sum: f64 = values.iter().map(|v| (v - max).exp()).sum();
    max + sum.ln()
}
