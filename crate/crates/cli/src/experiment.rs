//! Experiment orchestration: run the configured sampler, evaluate the metric
//! suite at every checkpoint, and write the output files (particle CSVs with
//! JSON sidecars, metrics CSV/JSON, final scatter SVG, manifest).

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anneal_core::metrics::{knn_kl, ksd, mmd, mms, sinkhorn_w2, DiagnosticsReport, MetricsRow};

use anneal_core::paths::PathScore;
use anneal_core::sampler::{run_annealed, run_plain, stream_rng, Checkpoint, AUX_STREAM};
use nalgebra::DVector;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{MetricKind, ResolvedExperiment, ResolvedPath};
use crate::error::{CliError, Result};
use crate::svg;

/// Sidecar of one particle checkpoint.
#[derive(Serialize)]
struct CheckpointMeta {
    iteration: usize,
    t: f64,
    lambda: f64,
    wall_time_ms: u64,
    score_query_count: u64,
}

/// Files produced by a run, in write order.
pub struct RunArtifacts {
    pub report: Option<DiagnosticsReport>,
    pub files: Vec<PathBuf>,
}

pub fn run_experiment(exp: &ResolvedExperiment, out_dir: &Path) -> Result<RunArtifacts> {
    let trajectory = execute(exp)?;
    let report = if exp.enabled.is_empty() {
        None
    } else {
        Some(evaluate(exp, &trajectory)?)
    };
    write_outputs(exp, &trajectory, report.as_ref(), out_dir).map(|files| RunArtifacts {
        report,
        files,
    })
}

/// Runs the sampler only.
pub fn execute(exp: &ResolvedExperiment) -> Result<Vec<Checkpoint>> {
    let target = &exp.target;
    let trajectory = match &exp.path {
        ResolvedPath::Plain => run_plain(&exp.run, target)?,
        ResolvedPath::Dilation => run_annealed(&exp.run, &PathScore::Dilation { target })?,
        ResolvedPath::Geometric { proposal } => run_annealed(
            &exp.run,
            &PathScore::Geometric {
                target,
                proposal: proposal.clone(),
            },
        )?,
        ResolvedPath::ConvolutionalExact { proposal } => run_annealed(
            &exp.run,
            &PathScore::ConvolutionalExact {
                target,
                proposal: proposal.clone(),
            },
        )?,
        ResolvedPath::ConvolutionalMc { config } => run_annealed(
            &exp.run,
            &PathScore::ConvolutionalMc {
                target,
                config: *config,
            },
        )?,
    };
    Ok(trajectory)
}

/// Metric suite over a trajectory. Reference samples are drawn once from the
/// target with a stream derived from the master seed, outside the particle
/// streams.
pub fn evaluate(
    exp: &ResolvedExperiment,
    trajectory: &[Checkpoint],
) -> Result<DiagnosticsReport> {
    let target = &exp.target;
    let needs_reference = exp
        .enabled
        .iter()
        .any(|m| matches!(m, MetricKind::Mmd | MetricKind::Kl | MetricKind::Ot));
    let reference: Vec<DVector<f64>> = if needs_reference {
        let mut rng = stream_rng(exp.seed, AUX_STREAM);
        target.sample(exp.reference_samples, &mut rng)
    } else {
        Vec::new()
    };

    let mut report = DiagnosticsReport::new(exp.label.clone());
    report.ot_epsilon = exp.metrics.ot_epsilon;
    for checkpoint in trajectory {
        let cloud = &checkpoint.positions;
        let mut row = MetricsRow {
            iteration: checkpoint.iteration,
            ..Default::default()
        };
        for metric in &exp.enabled {
            match metric {
                MetricKind::Ksd => {
                    row.ksd = Some(ksd(cloud, |x| target.score(x), &exp.metrics)?);
                }
                MetricKind::Mmd => {
                    row.mmd = Some(mmd(cloud, &reference, &exp.metrics)?);
                }
                MetricKind::Kl => match knn_kl(cloud, &reference, &exp.metrics) {
                    Ok(est) => {
                        row.kl = Some(est.kl);
                        row.rev_kl = Some(est.rev_kl);
                        report.knn_excluded_points +=
                            (est.excluded_forward + est.excluded_reverse) as u64;
                    }
                    // A fully degenerate cloud (e.g. the Dirac initialization
                    // checkpoint) has no usable neighbor distances; leave the
                    // cells empty and count the exclusions.
                    Err(anneal_core::Error::InvalidInput(_)) => {
                        report.knn_excluded_points += cloud.len() as u64;
                    }
                    Err(e) => return Err(e.into()),
                },
                MetricKind::Ot => {
                    let res = sinkhorn_w2(cloud, &reference, &exp.metrics)?;
                    row.ot = Some(res.value);
                    if !res.converged {
                        report.ot_unconverged_checkpoints += 1;
                    }
                }
                MetricKind::Mms => {
                    row.mms = Some(mms(cloud, target)?);
                }
            }
        }
        report.rows.push(row);
    }
    Ok(report)
}

fn write_outputs(
    exp: &ResolvedExperiment,
    trajectory: &[Checkpoint],
    report: Option<&DiagnosticsReport>,
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir)?;
    let mut files: Vec<PathBuf> = Vec::new();
    let write = |name: &str, bytes: &[u8]| -> Result<PathBuf> {
        let path = out_dir.join(name);
        fs::write(&path, bytes)?;
        Ok(path)
    };

    for checkpoint in trajectory {
        let csv = particles_csv(&checkpoint.positions);
        files.push(write(
            &format!("particles_{}.csv", checkpoint.iteration),
            csv.as_bytes(),
        )?);
        let meta = CheckpointMeta {
            iteration: checkpoint.iteration,
            t: checkpoint.time,
            lambda: checkpoint.lambda,
            wall_time_ms: checkpoint.wall_time_ms,
            score_query_count: checkpoint.score_queries,
        };
        let meta_json = serde_json::to_string_pretty(&meta)
            .map_err(|e| CliError::Other(e.to_string()))?;
        files.push(write(
            &format!("particles_{}.json", checkpoint.iteration),
            meta_json.as_bytes(),
        )?);
    }

    if let Some(report) = report {
        files.push(write("metrics.csv", report.to_csv().as_bytes())?);
        let json = serde_json::to_string_pretty(report)
            .map_err(|e| CliError::Other(e.to_string()))?;
        files.push(write("metrics.json", json.as_bytes())?);
        if exp.target.dim() == 2 {
            if let Some(last) = trajectory.last() {
                let image = svg::scatter(&last.positions, &exp.target);
                files.push(write("final.svg", image.as_bytes())?);
            }
        }
    }

    // Manifest last: resolved config plus a content hash per output file.
    let manifest = manifest_json(exp, &files)?;
    let manifest_path = out_dir.join("manifest.json");
    fs::write(&manifest_path, manifest.as_bytes())?;
    files.push(manifest_path);
    Ok(files)
}

fn particles_csv(cloud: &[DVector<f64>]) -> String {
    let d = cloud.first().map_or(0, |x| x.len());
    let mut out = String::new();
    for a in 0..d {
        if a > 0 {
            out.push(',');
        }
        let _ = write!(out, "x_{}", a + 1);
    }
    out.push('\n');
    for x in cloud {
        for a in 0..d {
            if a > 0 {
                out.push(',');
            }
            let _ = write!(out, "{}", x[a]);
        }
        out.push('\n');
    }
    out
}

fn manifest_json(exp: &ResolvedExperiment, files: &[PathBuf]) -> Result<String> {
    let mut hashes = serde_json::Map::new();
    for path in files {
        let bytes = fs::read(path)?;
        let digest = Sha256::digest(&bytes);
        let name = path
            .file_name()
            .and_then(|n| n.to_str())
            .unwrap_or("unknown")
            .to_string();
        hashes.insert(
            name,
            serde_json::Value::String(format!("sha256:{}", hex_string(&digest))),
        );
    }
    let manifest = serde_json::json!({
        "config": exp.echo,
        "files": serde_json::Value::Object(hashes),
    });
    serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Other(e.to_string()))
}

fn hex_string(bytes: &[u8]) -> String {
    let mut out = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        let _ = write!(out, "{b:02x}");
    }
    out
}

/// Helper used by tests and the compare command: load a metrics report.
pub fn load_report(path: &Path) -> Result<DiagnosticsReport> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Other(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("invalid report {}: {e}", path.display())))
}
