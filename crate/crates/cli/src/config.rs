//! Experiment configuration: one JSON document with sections
//! {target, path, schedule, run, metrics, output}, resolved into the library
//! types before anything touches the filesystem.

use anneal_core::metrics::MetricConfig;
use anneal_core::model::{Gaussian, GaussianJson, GaussianMixture, MixtureJson};
use anneal_core::paths::{McConfig, Schedule};
use anneal_core::sampler::{Init, RunConfig, StepPolicy};
use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::presets;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: Option<String>,
    pub target: TargetSpec,
    pub path: PathSpec,
    #[serde(default = "default_schedule")]
    pub schedule: Schedule,
    pub run: RunSpec,
    #[serde(default)]
    pub metrics: MetricsSpec,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default)]
    pub seed: u64,
}

fn default_schedule() -> Schedule {
    Schedule::Linear
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TargetSpec {
    Preset { preset: String },
    Gmm { gmm: MixtureJson },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PathSpec {
    /// Plain (non-annealed) unadjusted Langevin.
    None,
    Dilation,
    Geometric {
        #[serde(default)]
        proposal: Option<GaussianJson>,
    },
    ConvolutionalExact {
        #[serde(default)]
        proposal: Option<GaussianJson>,
    },
    ConvolutionalMc {
        inner_samples: usize,
        inner_iterations: usize,
        inner_step: f64,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSpec {
    pub particles: usize,
    pub iterations: usize,
    pub step: StepPolicy,
    pub init: InitSpec,
    #[serde(default = "default_stride")]
    pub checkpoint_stride: usize,
}

fn default_stride() -> usize {
    1000
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitSpec {
    Dirac,
    Gaussian {
        mean: Vec<f64>,
        covariance: anneal_core::model::CovarianceJson,
    },
    Uniform {
        low: Vec<f64>,
        high: Vec<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    Ksd,
    Mmd,
    /// Forward and reverse k-NN KL.
    Kl,
    Ot,
    Mms,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricsSpec {
    #[serde(default = "all_metrics")]
    pub enabled: Vec<MetricKind>,
    /// Reference draws for the sample-based metrics; defaults to the
    /// particle count.
    #[serde(default)]
    pub reference_samples: Option<usize>,
    #[serde(default = "d_ksd_beta")]
    pub ksd_beta: f64,
    #[serde(default = "d_mmd_bandwidth")]
    pub mmd_bandwidth: f64,
    #[serde(default = "d_knn_k")]
    pub knn_k: usize,
    #[serde(default = "d_ot_epsilon")]
    pub ot_epsilon: f64,
    #[serde(default = "d_ot_max_iterations")]
    pub ot_max_iterations: usize,
    #[serde(default = "d_ot_tolerance")]
    pub ot_tolerance: f64,
}

fn all_metrics() -> Vec<MetricKind> {
    vec![
        MetricKind::Ksd,
        MetricKind::Mmd,
        MetricKind::Kl,
        MetricKind::Ot,
        MetricKind::Mms,
    ]
}
fn d_ksd_beta() -> f64 {
    MetricConfig::default().ksd_beta
}
fn d_mmd_bandwidth() -> f64 {
    MetricConfig::default().mmd_bandwidth
}
fn d_knn_k() -> usize {
    MetricConfig::default().knn_k
}
fn d_ot_epsilon() -> f64 {
    MetricConfig::default().ot_epsilon
}
fn d_ot_max_iterations() -> usize {
    MetricConfig::default().ot_max_iterations
}
fn d_ot_tolerance() -> f64 {
    MetricConfig::default().ot_tolerance
}

impl Default for MetricsSpec {
    fn default() -> Self {
        Self {
            enabled: all_metrics(),
            reference_samples: None,
            ksd_beta: d_ksd_beta(),
            mmd_bandwidth: d_mmd_bandwidth(),
            knn_k: d_knn_k(),
            ot_epsilon: d_ot_epsilon(),
            ot_max_iterations: d_ot_max_iterations(),
            ot_tolerance: d_ot_tolerance(),
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct OutputSpec {
    #[serde(default)]
    pub dir: Option<String>,
}

/// Path descriptor with the proposal/estimator resolved.
#[derive(Debug, Clone)]
pub enum ResolvedPath {
    Plain,
    Dilation,
    Geometric { proposal: Gaussian },
    ConvolutionalExact { proposal: Gaussian },
    ConvolutionalMc { config: McConfig },
}

impl ResolvedPath {
    pub fn label(&self) -> &'static str {
        match self {
            ResolvedPath::Plain => "plain",
            ResolvedPath::Dilation => "dilation",
            ResolvedPath::Geometric { .. } => "geometric",
            ResolvedPath::ConvolutionalExact { .. } => "convolutional_exact",
            ResolvedPath::ConvolutionalMc { .. } => "convolutional_mc",
        }
    }
}

/// A fully validated experiment, ready to run.
pub struct ResolvedExperiment {
    pub label: String,
    pub seed: u64,
    pub target: GaussianMixture,
    pub path: ResolvedPath,
    pub run: RunConfig,
    pub metrics: MetricConfig,
    pub enabled: Vec<MetricKind>,
    pub reference_samples: usize,
    pub output_dir: Option<String>,
    /// Full resolved config, echoed into the manifest.
    pub echo: serde_json::Value,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| {
            CliError::Config(format!(
                "invalid experiment config at line {}, column {}: {e}",
                e.line(),
                e.column()
            ))
        })
    }

    pub fn resolve(&self, seed_override: Option<u64>) -> Result<ResolvedExperiment> {
        let target = match &self.target {
            TargetSpec::Preset { preset } => presets::target(preset)?,
            TargetSpec::Gmm { gmm } => gmm
                .build()
                .map_err(|e| CliError::Config(format!("target: {e}")))?,
        };
        let dim = target.dim();

        let standard = || Gaussian::standard(dim);
        let build_proposal = |spec: &Option<GaussianJson>| -> Result<Gaussian> {
            match spec {
                None => Ok(standard()),
                Some(json) => json
                    .build()
                    .map_err(|e| CliError::Config(format!("proposal: {e}"))),
            }
        };
        let path = match &self.path {
            PathSpec::None => ResolvedPath::Plain,
            PathSpec::Dilation => ResolvedPath::Dilation,
            PathSpec::Geometric { proposal } => ResolvedPath::Geometric {
                proposal: build_proposal(proposal)?,
            },
            PathSpec::ConvolutionalExact { proposal } => ResolvedPath::ConvolutionalExact {
                proposal: build_proposal(proposal)?,
            },
            PathSpec::ConvolutionalMc {
                inner_samples,
                inner_iterations,
                inner_step,
            } => ResolvedPath::ConvolutionalMc {
                config: McConfig {
                    samples: *inner_samples,
                    chain_iterations: *inner_iterations,
                    step: *inner_step,
                },
            },
        };

        let init = match &self.run.init {
            InitSpec::Dirac => Init::DiracAtOrigin,
            InitSpec::Gaussian { mean, covariance } => Init::Gaussian(
                Gaussian::new(
                    DVector::from_row_slice(mean),
                    covariance
                        .to_matrix()
                        .map_err(|e| CliError::Config(format!("init: {e}")))?,
                )
                .map_err(|e| CliError::Config(format!("init: {e}")))?,
            ),
            InitSpec::Uniform { low, high } => Init::Uniform {
                low: low.clone(),
                high: high.clone(),
            },
        };

        let seed = seed_override.unwrap_or(self.seed);
        let run = RunConfig {
            particles: self.run.particles,
            iterations: self.run.iterations,
            policy: self.run.step,
            schedule: self.schedule,
            init,
            checkpoint_stride: self.run.checkpoint_stride,
            seed,
        };
        run.validate()
            .map_err(|e| CliError::Config(format!("run: {e}")))?;

        let metrics = MetricConfig {
            ksd_beta: self.metrics.ksd_beta,
            mmd_bandwidth: self.metrics.mmd_bandwidth,
            knn_k: self.metrics.knn_k,
            ot_epsilon: self.metrics.ot_epsilon,
            ot_max_iterations: self.metrics.ot_max_iterations,
            ot_tolerance: self.metrics.ot_tolerance,
        };
        metrics
            .validate()
            .map_err(|e| CliError::Config(format!("metrics: {e}")))?;

        let label = self.name.clone().unwrap_or_else(|| {
            let target_name = match &self.target {
                TargetSpec::Preset { preset } => preset.clone(),
                TargetSpec::Gmm { .. } => "gmm".to_string(),
            };
            format!("{target_name}-{}", path.label())
        });

        let mut resolved_cfg = self.clone();
        resolved_cfg.seed = seed;
        resolved_cfg.name = Some(label.clone());
        let echo = serde_json::to_value(&resolved_cfg)
            .map_err(|e| CliError::Other(format!("config echo: {e}")))?;

        Ok(ResolvedExperiment {
            label,
            seed,
            target,
            path,
            run,
            metrics,
            enabled: self.metrics.enabled.clone(),
            reference_samples: self.metrics.reference_samples.unwrap_or(self.run.particles),
            output_dir: self.output.dir.clone(),
            echo,
        })
    }
}
