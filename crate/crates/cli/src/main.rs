use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use anneal_cli::config::ExperimentConfig;
use anneal_cli::error::{CliError, Result};
use anneal_cli::{compare, cost, experiment, presets};

/// Annealed Langevin sampling benchmarks.
#[derive(Parser)]
#[command(name = "sample", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment from a JSON config.
    Run {
        /// Experiment config file.
        #[arg(long)]
        config: PathBuf,
        /// Output directory (falls back to the config's output.dir).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Master seed override.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker-thread bound; falls back to ANNEAL_PATH_THREADS, then all
        /// cores. Outputs are identical for any value.
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Merge metrics reports from several runs into a comparison table.
    Compare {
        /// metrics.json files from `sample run`.
        #[arg(required = true)]
        reports: Vec<PathBuf>,
        /// Directory for comparison.csv / comparison.json.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Tabulate score-query costs of the recursive windowed estimator.
    Cost {
        #[arg(long)]
        config: PathBuf,
    },
    /// Preset management.
    Preset {
        #[command(subcommand)]
        command: PresetCommand,
    },
}

#[derive(Subcommand)]
enum PresetCommand {
    /// List built-in presets.
    List,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run {
            config,
            out,
            seed,
            jobs,
        } => run(&config, out, seed, jobs),
        Command::Compare { reports, out } => {
            let loaded = reports
                .iter()
                .map(|p| experiment::load_report(p))
                .collect::<Result<Vec<_>>>()?;
            let comparison = compare::compare_runs(&loaded)?;
            std::fs::create_dir_all(&out)?;
            std::fs::write(out.join("comparison.csv"), comparison.csv.as_bytes())?;
            let summary = serde_json::to_string_pretty(&comparison.summary)
                .map_err(|e| CliError::Other(e.to_string()))?;
            std::fs::write(out.join("comparison.json"), summary.as_bytes())?;
            println!("wrote {}", out.join("comparison.csv").display());
            println!("wrote {}", out.join("comparison.json").display());
            Ok(())
        }
        Command::Cost { config } => {
            let text = std::fs::read_to_string(&config)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", config.display())))?;
            let parsed = cost::load(&text)?;
            print!("{}", cost::cost_table(&parsed)?);
            Ok(())
        }
        Command::Preset { command } => match command {
            PresetCommand::List => {
                for p in presets::PRESETS {
                    println!("{:8}  {}", p.name, p.description);
                }
                Ok(())
            }
        },
    }
}

fn run(
    config_path: &PathBuf,
    out: Option<PathBuf>,
    seed: Option<u64>,
    jobs: Option<usize>,
) -> Result<()> {
    let text = std::fs::read_to_string(config_path).map_err(|e| {
        CliError::Config(format!("cannot read {}: {e}", config_path.display()))
    })?;
    let config = ExperimentConfig::from_json(&text)?;
    let resolved = config.resolve(seed)?;
    let out_dir = out
        .or_else(|| resolved.output_dir.as_ref().map(PathBuf::from))
        .ok_or_else(|| {
            CliError::Config("no output directory: pass --out or set output.dir".to_string())
        })?;

    let jobs = jobs.or_else(|| {
        std::env::var("ANNEAL_PATH_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    let artifacts = match jobs {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Other(format!("thread pool: {e}")))?;
            pool.install(|| experiment::run_experiment(&resolved, &out_dir))?
        }
        None => experiment::run_experiment(&resolved, &out_dir)?,
    };

    for file in &artifacts.files {
        println!("wrote {}", file.display());
    }
    if let Some(report) = &artifacts.report {
        if let Some(row) = report.final_row() {
            let fmt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.6}"));
            println!(
                "final@{}: ksd {} mmd {} kl {} rev_kl {} ot {} mms {}",
                row.iteration,
                fmt(row.ksd),
                fmt(row.mmd),
                fmt(row.kl),
                fmt(row.rev_kl),
                fmt(row.ot),
                fmt(row.mms)
            );
        }
    }
    Ok(())
}
