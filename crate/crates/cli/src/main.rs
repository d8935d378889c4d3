use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use elas_core::pipeline::{self, ExperimentConfig, StageReport};
use elas_core::{Error, Result};

/// Landscape features vs. surrogate-model error for CMA-ES runs.
#[derive(Parser)]
#[command(name = "elas", version)]
struct Cli {
    #[command(subcommand)]
    stage: Stage,
}

#[derive(Subcommand)]
enum Stage {
    /// Run CMA-ES and store runs, sampled generations and resamples.
    Generate(StageArgs),
    /// Compute landscape features for every stored run.
    Features(StageArgs),
    /// Train and score every model setting on every sampled generation.
    Evaluate(StageArgs),
    /// Split the error table into validation and test parts.
    Split(StageArgs),
    /// Screen, cluster and test features and model errors.
    Analyze(StageArgs),
}

#[derive(clap::Args)]
struct StageArgs {
    /// Experiment configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

type StageFn = fn(&ExperimentConfig, &Path) -> Result<StageReport>;

const EXIT_FAILED: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_PARTIAL: u8 = 3;

fn run_stage(f: StageFn, cfg: &ExperimentConfig, out: &Path) -> ExitCode {
    if let Err(e) = std::fs::create_dir_all(out) {
        eprintln!("error: cannot create {}: {e}", out.display());
        return ExitCode::from(EXIT_FAILED);
    }
    match f(cfg, out) {
        Ok(report) if report.is_complete() => {
            eprintln!("{}: {} task(s) done", report.stage, report.tasks);
            ExitCode::SUCCESS
        }
        Ok(report) => {
            eprintln!(
                "{}: {} of {} task(s) failed, see {}",
                report.stage,
                report.failures.len(),
                report.tasks,
                out.join(format!("{}_failures.json", report.stage)).display()
            );
            ExitCode::from(EXIT_PARTIAL)
        }
        Err(e @ Error::Config(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_FAILED)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (f, args): (StageFn, StageArgs) = match cli.stage {
        Stage::Generate(a) => (pipeline::cmd_generate, a),
        Stage::Features(a) => (pipeline::cmd_features, a),
        Stage::Evaluate(a) => (pipeline::cmd_evaluate, a),
        Stage::Split(a) => (pipeline::cmd_split, a),
        Stage::Analyze(a) => (pipeline::cmd_analyze, a),
    };
    let cfg = match ExperimentConfig::load(&args.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    run_stage(f, &cfg, &args.out)
}
