//! Scatter plot of a final particle cloud over the target density, as a
//! self-contained SVG (2-D targets only).

use std::fmt::Write;

use anneal_core::model::GaussianMixture;
use nalgebra::DVector;

const SIZE: f64 = 640.0;
const GRID: usize = 72;

/// Density heat grid in blue, particles as red circles.
pub fn scatter(cloud: &[DVector<f64>], target: &GaussianMixture) -> String {
    let (lo, hi) = bounds(cloud, target);
    let span = hi - lo;
    let to_px = |v: f64| (v - lo) / span * SIZE;

    let mut density = vec![0.0f64; GRID * GRID];
    let mut max_density: f64 = 0.0;
    for i in 0..GRID {
        for j in 0..GRID {
            let x = lo + (i as f64 + 0.5) / GRID as f64 * span;
            let y = lo + (j as f64 + 0.5) / GRID as f64 * span;
            let p = target
                .log_density(&DVector::from_vec(vec![x, y]))
                .map(f64::exp)
                .unwrap_or(0.0);
            density[i * GRID + j] = p;
            max_density = max_density.max(p);
        }
    }

    let mut out = String::new();
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    );
    let _ = writeln!(
        out,
        r#"<rect x="0" y="0" width="{SIZE}" height="{SIZE}" fill="white"/>"#
    );

    let cell = SIZE / GRID as f64;
    let _ = writeln!(out, r##"<g stroke="none" fill="#1f77b4">"##);
    for i in 0..GRID {
        for j in 0..GRID {
            let p = density[i * GRID + j];
            if p <= 0.0 || max_density <= 0.0 {
                continue;
            }
            // Perceptual-ish ramp; skip near-invisible cells to keep the
            // file small.
            let opacity = (p / max_density).powf(0.35);
            if opacity < 0.02 {
                continue;
            }
            let px = i as f64 * cell;
            // SVG y grows downward.
            let py = SIZE - (j as f64 + 1.0) * cell;
            let _ = writeln!(
                out,
                r#"<rect x="{px:.2}" y="{py:.2}" width="{cell:.2}" height="{cell:.2}" fill-opacity="{opacity:.3}"/>"#
            );
        }
    }
    let _ = writeln!(out, "</g>");

    let _ = writeln!(out, r##"<g stroke="none" fill="#d62728" fill-opacity="0.8">"##);
    for p in cloud {
        let cx = to_px(p[0]);
        let cy = SIZE - to_px(p[1]);
        let _ = writeln!(out, r#"<circle cx="{cx:.2}" cy="{cy:.2}" r="2"/>"#);
    }
    let _ = writeln!(out, "</g>");
    let _ = writeln!(out, "</svg>");
    out
}

fn bounds(cloud: &[DVector<f64>], target: &GaussianMixture) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for c in target.components() {
        let sigma = c.covariance().diagonal().iter().fold(0.0f64, |a, v| a.max(*v)).sqrt();
        for v in c.mean().iter() {
            lo = lo.min(v - 4.0 * sigma);
            hi = hi.max(v + 4.0 * sigma);
        }
    }
    for x in cloud {
        for v in x.iter() {
            lo = lo.min(*v);
            hi = hi.max(*v);
        }
    }
    if !(lo < hi) {
        (lo - 1.0, lo + 1.0)
    } else {
        let pad = 0.05 * (hi - lo);
        (lo - pad, hi + pad)
    }
}
