//! Built-in experiment presets. The mode layouts are frozen data files
//! compiled into the binary, not regenerated at runtime.

use anneal_core::model::GaussianMixture;

use crate::config::{
    ExperimentConfig, InitSpec, MetricsSpec, OutputSpec, PathSpec, RunSpec, TargetSpec,
};
use crate::error::{CliError, Result};
use anneal_core::paths::Schedule;
use anneal_core::sampler::StepPolicy;

const GRID16: &str = include_str!("../presets/grid16.json");
const RINGS40: &str = include_str!("../presets/rings40.json");

pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    data: &'static str,
}

pub const PRESETS: &[Preset] = &[
    Preset {
        name: "grid16",
        description: "16 equal-weight isotropic Gaussians (sigma 0.1) on a 4x4 planar grid over [-1.5, 1.5]^2",
        data: GRID16,
    },
    Preset {
        name: "rings40",
        description: "40 equal-weight isotropic Gaussians (sigma 0.04) on three concentric rings of radii 0.45/0.85/1.25",
        data: RINGS40,
    },
];

/// Target mixture of a named preset.
pub fn target(name: &str) -> Result<GaussianMixture> {
    let preset = PRESETS
        .iter()
        .find(|p| p.name == name)
        .ok_or_else(|| CliError::Config(format!("unknown preset '{name}'")))?;
    serde_json::from_str(preset.data)
        .map_err(|e| CliError::Other(format!("embedded preset '{name}' is corrupt: {e}")))
}

/// The benchmark protocol shared by the preset experiments: 1000 particles,
/// 10000 iterations, base step 0.001, linear schedule, position-adaptive
/// steps.
pub fn protocol(particles: usize, iterations: usize) -> RunSpec {
    RunSpec {
        particles,
        iterations,
        step: StepPolicy::PositionAdaptive {
            step: 0.001,
            bound: 0.01,
        },
        init: InitSpec::Dirac,
        checkpoint_stride: 1000,
    }
}

/// Full experiment template for a preset target and path kind.
///
/// The dilation path runs from its Dirac initialization; the other samplers
/// start from the standard-Gaussian proposal.
pub fn experiment(name: &str, path: PathSpec, seed: u64) -> Result<ExperimentConfig> {
    // Validate the preset name early.
    let _ = target(name)?;
    let mut run = protocol(1000, 10_000);
    if !matches!(path, PathSpec::Dilation) {
        run.init = InitSpec::Gaussian {
            mean: vec![0.0, 0.0],
            covariance: anneal_core::model::CovarianceJson::Diagonal(vec![1.0, 1.0]),
        };
    }
    let path_label = match &path {
        PathSpec::None => "plain",
        PathSpec::Dilation => "dilation",
        PathSpec::Geometric { .. } => "geometric",
        PathSpec::ConvolutionalExact { .. } => "convolutional_exact",
        PathSpec::ConvolutionalMc { .. } => "convolutional_mc",
    };
    Ok(ExperimentConfig {
        name: Some(format!("{name}-{path_label}")),
        target: TargetSpec::Preset {
            preset: name.to_string(),
        },
        path,
        schedule: Schedule::Linear,
        run,
        metrics: MetricsSpec::default(),
        output: OutputSpec::default(),
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_load_and_have_expected_shapes() {
        let g = target("grid16").unwrap();
        assert_eq!(g.num_components(), 16);
        assert_eq!(g.dim(), 2);
        let r = target("rings40").unwrap();
        assert_eq!(r.num_components(), 40);
        assert_eq!(r.dim(), 2);
    }

    #[test]
    fn unknown_preset_errors() {
        assert!(target("grid17").is_err());
    }

    #[test]
    fn experiment_template_resolves() {
        let cfg = experiment("rings40", PathSpec::Dilation, 42).unwrap();
        let resolved = cfg.resolve(None).unwrap();
        assert_eq!(resolved.run.particles, 1000);
        assert_eq!(resolved.run.iterations, 10_000);
        assert_eq!(resolved.label, "rings40-dilation");
    }
}
