//! Side-by-side comparison of diagnostics reports from multiple runs.

use std::fmt::Write as _;

use anneal_core::metrics::{DiagnosticsReport, MetricsRow};
use serde::Serialize;

use crate::error::{CliError, Result};

const METRICS: [&str; 6] = ["ksd", "mmd", "kl", "rev_kl", "ot", "mms"];

fn metric_value(row: &MetricsRow, metric: &str) -> Option<f64> {
    match metric {
        "ksd" => row.ksd,
        "mmd" => row.mmd,
        "kl" => row.kl,
        "rev_kl" => row.rev_kl,
        "ot" => row.ot,
        "mms" => row.mms,
        _ => None,
    }
}

pub struct Comparison {
    pub csv: String,
    pub summary: serde_json::Value,
}

#[derive(Serialize)]
struct FinalEntry {
    label: String,
    iteration: usize,
    ksd: Option<f64>,
    mmd: Option<f64>,
    kl: Option<f64>,
    rev_kl: Option<f64>,
    ot: Option<f64>,
    mms: Option<f64>,
}

/// Merges reports with identical checkpoint grids into one CSV (one column
/// group per run) plus a JSON summary of final-checkpoint values and their
/// largest pairwise gaps.
pub fn compare_runs(reports: &[DiagnosticsReport]) -> Result<Comparison> {
    if reports.len() < 2 {
        return Err(CliError::Config(
            "compare needs at least two reports".to_string(),
        ));
    }
    let grid = reports[0].iterations();
    for r in &reports[1..] {
        if r.iterations() != grid {
            return Err(CliError::Config(format!(
                "checkpoint grids differ: run '{}' does not match run '{}'",
                r.label, reports[0].label
            )));
        }
    }

    // Disambiguate duplicate labels positionally.
    let labels: Vec<String> = reports
        .iter()
        .enumerate()
        .map(|(i, r)| {
            if reports.iter().filter(|o| o.label == r.label).count() > 1 {
                format!("{}#{}", r.label, i + 1)
            } else {
                r.label.clone()
            }
        })
        .collect();

    let mut csv = String::from("iteration");
    for label in &labels {
        for metric in METRICS {
            let _ = write!(csv, ",{label}:{metric}");
        }
    }
    csv.push('\n');
    for (row_idx, iteration) in grid.iter().enumerate() {
        let _ = write!(csv, "{iteration}");
        for report in reports {
            let row = &report.rows[row_idx];
            for metric in METRICS {
                csv.push(',');
                if let Some(v) = metric_value(row, metric) {
                    let _ = write!(csv, "{v}");
                }
            }
        }
        csv.push('\n');
    }

    let finals: Vec<FinalEntry> = reports
        .iter()
        .zip(&labels)
        .map(|(r, label)| {
            let row = r.final_row().cloned().unwrap_or_default();
            FinalEntry {
                label: label.clone(),
                iteration: row.iteration,
                ksd: row.ksd,
                mmd: row.mmd,
                kl: row.kl,
                rev_kl: row.rev_kl,
                ot: row.ot,
                mms: row.mms,
            }
        })
        .collect();

    // Largest |difference| over run pairs at the final checkpoint, per metric.
    let mut diffs = serde_json::Map::new();
    for metric in METRICS {
        let values: Vec<f64> = reports
            .iter()
            .filter_map(|r| r.final_row().and_then(|row| metric_value(row, metric)))
            .collect();
        if values.len() == reports.len() {
            let mut max_gap = 0.0f64;
            for i in 0..values.len() {
                for j in (i + 1)..values.len() {
                    max_gap = max_gap.max((values[i] - values[j]).abs());
                }
            }
            diffs.insert(metric.to_string(), serde_json::json!(max_gap));
        }
    }

    let summary = serde_json::json!({
        "labels": labels,
        "final": finals,
        "pairwise_max_abs_diff": serde_json::Value::Object(diffs),
    });
    Ok(Comparison { csv, summary })
}
