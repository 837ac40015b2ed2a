//! Entropic 2-Wasserstein upper bound via log-domain-stabilized Sinkhorn
//! scaling.
//!
//! Squared-Euclidean cost on uniform weights. To keep ε comparable across
//! experiments of different scales, both point sets are divided by the
//! reference set's mean pairwise distance before solving; the returned value
//! is converted back to the original units.
//!
//! The solver runs the classic scaling iteration `u = a ./ Kv`,
//! `v = b ./ Kᵀu`, absorbing the scalings into the dual potentials whenever
//! they threaten to over/underflow and rebuilding the kernel
//! `K̂ = exp((f_i + g_j - C_ij)/ε)` (Schmitzer-style stabilization). An ε
//! ladder warm-starts the potentials from a heavily smoothed problem.

use nalgebra::DVector;
use rayon::prelude::*;

use crate::error::{Error, Result};

use super::{sum_rows, Compensated, MetricConfig};

/// Outcome of one entropic OT solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinkhornResult {
    /// `scale · sqrt(Σ P_ij C_ij)`: entropic upper bound on W₂ in the
    /// original units (regularization bias included).
    pub value: f64,
    /// False when the iteration cap was hit before the marginal tolerance.
    pub converged: bool,
    pub iterations: usize,
    /// Regularization the value was computed at (on standardized data).
    pub epsilon: f64,
    /// Standardization scale (mean pairwise reference distance).
    pub scale: f64,
}

/// Absorb scalings into the potentials when log-magnitudes exceed this.
const ABSORB_THRESHOLD: f64 = 30.0;
const CHECK_EVERY: usize = 5;

pub fn sinkhorn_w2(
    cloud: &[DVector<f64>],
    reference: &[DVector<f64>],
    cfg: &MetricConfig,
) -> Result<SinkhornResult> {
    cfg.validate()?;
    let n = cloud.len();
    let m = reference.len();
    if n == 0 || m == 0 {
        return Err(Error::input("sinkhorn needs non-empty point sets"));
    }
    let d = cloud[0].len();
    if cloud.iter().any(|x| x.len() != d) || reference.iter().any(|x| x.len() != d) {
        return Err(Error::dim(d, 0));
    }

    let raw_scale = mean_pairwise_distance(reference);
    let scale = if raw_scale > 1e-12 { raw_scale } else { 1.0 };

    // Cost matrix in standardized coordinates, row-major n×m.
    let inv_scale_sq = 1.0 / (scale * scale);
    let cost: Vec<f64> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            let xi = &cloud[i];
            reference
                .iter()
                .map(move |y| {
                    let mut r2 = 0.0;
                    for a in 0..xi.len() {
                        let diff = xi[a] - y[a];
                        r2 += diff * diff;
                    }
                    r2 * inv_scale_sq
                })
                .collect::<Vec<_>>()
        })
        .collect();
    let max_cost = cost.iter().fold(0.0f64, |acc, v| acc.max(*v));

    let a_w = 1.0 / n as f64;
    let b_w = 1.0 / m as f64;
    let eps = cfg.ot_epsilon;

    let mut f = vec![0.0f64; n];
    let mut g = vec![0.0f64; m];
    let mut u = vec![1.0f64; n];
    let mut v = vec![1.0f64; m];
    let mut kernel = vec![0.0f64; n * m];

    // ε ladder: start from a heavily smoothed problem and halve down to the
    // target ε, carrying the potentials along.
    let mut rungs = vec![eps];
    let mut e = max_cost / 8.0;
    while e > eps {
        rungs.push(e);
        e *= 0.5;
    }
    rungs.sort_by(|x, y| y.partial_cmp(x).unwrap());

    let mut iterations = 0usize;
    let mut converged = false;
    'ladder: for (r, &eps_cur) in rungs.iter().enumerate() {
        let last_rung = r + 1 == rungs.len();
        rebuild_kernel(&mut kernel, &cost, &f, &g, eps_cur, n, m);
        u.iter_mut().for_each(|x| *x = 1.0);
        v.iter_mut().for_each(|x| *x = 1.0);

        let mut rung_iters = 0usize;
        loop {
            // u-update then v-update; after the v-update the b-marginals are
            // exact, so convergence is measured on the a-marginals.
            let kv = mat_vec(&kernel, &v, n, m);
            for i in 0..n {
                u[i] = a_w / kv[i].max(f64::MIN_POSITIVE);
            }
            let ktu = mat_t_vec(&kernel, &u, n, m);
            for j in 0..m {
                v[j] = b_w / ktu[j].max(f64::MIN_POSITIVE);
            }
            iterations += 1;
            rung_iters += 1;

            let log_extreme = u
                .iter()
                .chain(v.iter())
                .fold(0.0f64, |acc, x| acc.max(x.ln().abs()));
            if log_extreme > ABSORB_THRESHOLD {
                absorb(&mut f, &mut g, &mut u, &mut v, eps_cur);
                rebuild_kernel(&mut kernel, &cost, &f, &g, eps_cur, n, m);
            }

            if last_rung && rung_iters % CHECK_EVERY == 0 {
                let viol = marginal_violation(&kernel, &u, &v, a_w, n, m);
                if viol < cfg.ot_tolerance {
                    converged = true;
                    break 'ladder;
                }
            }
            if iterations >= cfg.ot_max_iterations {
                if !last_rung {
                    // Out of budget before reaching the target ε: report the
                    // plan there anyway so the value is at the advertised ε.
                    absorb(&mut f, &mut g, &mut u, &mut v, eps_cur);
                    rebuild_kernel(&mut kernel, &cost, &f, &g, eps, n, m);
                }
                break 'ladder;
            }
            if !last_rung && rung_iters >= 8 {
                // A few sweeps per rung are enough for a warm start; fold the
                // scalings into the potentials so the next rung inherits them.
                absorb(&mut f, &mut g, &mut u, &mut v, eps_cur);
                break;
            }
        }
    }

    // Transport cost under the current plan P = diag(u) K̂ diag(v).
    let cost_value = sum_rows(n, |i| {
        let mut row = Compensated::default();
        for j in 0..m {
            row.add(u[i] * kernel[i * m + j] * v[j] * cost[i * m + j]);
        }
        row.total()
    });

    Ok(SinkhornResult {
        value: scale * cost_value.max(0.0).sqrt(),
        converged,
        iterations,
        epsilon: eps,
        scale,
    })
}

fn mean_pairwise_distance(set: &[DVector<f64>]) -> f64 {
    let m = set.len();
    if m < 2 {
        return 0.0;
    }
    let total = sum_rows(m, |i| {
        let mut row = Compensated::default();
        for j in (i + 1)..m {
            row.add((&set[i] - &set[j]).norm());
        }
        row.total()
    });
    total / (m as f64 * (m as f64 - 1.0) / 2.0)
}

fn rebuild_kernel(kernel: &mut [f64], cost: &[f64], f: &[f64], g: &[f64], eps: f64, n: usize, m: usize) {
    kernel
        .par_chunks_mut(m)
        .enumerate()
        .for_each(|(i, row)| {
            let fi = f[i];
            for j in 0..m {
                row[j] = ((fi + g[j] - cost[i * m + j]) / eps).exp();
            }
        });
    let _ = n;
}

fn absorb(f: &mut [f64], g: &mut [f64], u: &mut [f64], v: &mut [f64], eps: f64) {
    for (fi, ui) in f.iter_mut().zip(u.iter_mut()) {
        *fi += eps * ui.ln();
        *ui = 1.0;
    }
    for (gj, vj) in g.iter_mut().zip(v.iter_mut()) {
        *gj += eps * vj.ln();
        *vj = 1.0;
    }
}

fn mat_vec(kernel: &[f64], v: &[f64], n: usize, m: usize) -> Vec<f64> {
    (0..n)
        .into_par_iter()
        .map(|i| {
            let row = &kernel[i * m..(i + 1) * m];
            let mut acc = 0.0;
            for j in 0..m {
                acc += row[j] * v[j];
            }
            acc
        })
        .collect()
}

fn mat_t_vec(kernel: &[f64], u: &[f64], n: usize, m: usize) -> Vec<f64> {
    // Column sums computed row-by-row in a fixed order to stay
    // thread-count-independent.
    let partials: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let row = &kernel[i * m..(i + 1) * m];
            row.iter().map(|k| k * u[i]).collect()
        })
        .collect();
    let mut out = vec![0.0f64; m];
    for p in partials {
        for j in 0..m {
            out[j] += p[j];
        }
    }
    out
}

fn marginal_violation(kernel: &[f64], u: &[f64], v: &[f64], a_w: f64, n: usize, m: usize) -> f64 {
    let rows: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let row = &kernel[i * m..(i + 1) * m];
            let mut acc = 0.0;
            for j in 0..m {
                acc += row[j] * v[j];
            }
            (u[i] * acc - a_w).abs()
        })
        .collect();
    let mut acc = Compensated::default();
    for r in rows {
        acc.add(r);
    }
    acc.total()
}
