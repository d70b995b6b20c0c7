//! `smcal` command-line front end.
//!
//! Exit codes: 0 success, 1 usage or validation error, 2 I/O error,
//! 3 numerical failure.

mod commands;
mod plot;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use smcal::Error;

#[derive(Debug, Parser)]
#[command(
    name = "smcal",
    version,
    about = "Smooth calibration error metrics, kernel models and sweeps"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic dataset or a miscalibrated score file.
    Generate(GenerateArgs),
    /// Fit a kernel model on a dataset file.
    Train(TrainArgs),
    /// Compute the metric panel for a model or a prediction file.
    Evaluate(EvaluateArgs),
    /// Fit a one-dimensional recalibrator on scores and apply it to held-out scores.
    Recalibrate(RecalibrateArgs),
    /// Run a seeded sweep and write rows, aggregates and trend checks.
    Sweep(SweepArgs),
    /// Render SVG line charts from an aggregates file.
    Plot(PlotArgs),
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("variant").required(true).args(["toy1d", "toy2d", "miscalibrated"])))]
pub struct GenerateArgs {
    /// One-dimensional Gaussian toy data.
    #[arg(long)]
    pub toy1d: bool,
    /// Two-dimensional Gaussian toy data.
    #[arg(long)]
    pub toy2d: bool,
    /// Distorted Bayes logits, e.g. `temperature:0.5` or `affine:2:0.5`.
    #[arg(long, value_name = "DISTORTION")]
    pub miscalibrated: Option<String>,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Dataset file (`x1,...,xd,y`).
    #[arg(long)]
    pub data: PathBuf,
    /// `krr` or `klr`.
    #[arg(long, default_value = "krr")]
    pub model: String,
    /// `gaussian` or `laplace`.
    #[arg(long, default_value = "gaussian")]
    pub kernel: String,
    /// Regularization strength.
    #[arg(long, required_unless_present = "schedule")]
    pub lambda: Option<f64>,
    /// KRR power-law schedule (`standard` or `swapped`); KLR uses 0.01.
    #[arg(long, conflicts_with = "lambda")]
    pub schedule: Option<String>,
    /// Kernel bandwidth; the median heuristic when absent.
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub fit: FitArgs,
}

#[derive(Debug, Args, Clone)]
pub struct FitArgs {
    /// KLR gradient step.
    #[arg(long, default_value_t = 0.01)]
    pub step: f64,
    /// KLR iteration cap.
    #[arg(long, default_value_t = 1000)]
    pub max_iter: usize,
    /// KLR stopping threshold on the objective decrease.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    /// Estimate the KLR optimization error with a long reference run.
    #[arg(long)]
    pub estimate_err: bool,
    /// Largest n fitted with the exact kernel; random features beyond.
    #[arg(long, default_value_t = 4000)]
    pub exact_threshold: usize,
    /// Number of random features.
    #[arg(long, default_value_t = 1000)]
    pub features: usize,
    /// Seed for random features.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("input").required(true).args(["model", "predictions"])))]
pub struct EvaluateArgs {
    /// Model file; needs `--data`.
    #[arg(long, requires = "data")]
    pub model: Option<PathBuf>,
    /// Evaluation dataset for `--model`.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Prediction file (`value,label`).
    #[arg(long, conflicts_with = "data")]
    pub predictions: Option<PathBuf>,
    /// Space of the prediction file when it has no `# space=` line.
    #[arg(long)]
    pub space: Option<String>,
    /// Require the dual metrics; fails on probability-space input.
    #[arg(long)]
    pub dual: bool,
    /// Also print the optimal Lipschitz witness.
    #[arg(long)]
    pub witness: bool,
    /// Number of equal-mass bins for binned ECE.
    #[arg(long)]
    pub bins: Option<usize>,
    /// Kernel for MMCE.
    #[arg(long, default_value = "laplace")]
    pub mmce_kernel: String,
}

#[derive(Debug, Args)]
pub struct RecalibrateArgs {
    /// Score file the recalibrator is fitted on.
    #[arg(long)]
    pub scores: PathBuf,
    /// Held-out score file the recalibrator is applied to.
    #[arg(long)]
    pub test: PathBuf,
    /// Space of score files without a `# space=` line.
    #[arg(long)]
    pub space: Option<String>,
    /// `krr` or `klr`.
    #[arg(long, default_value = "krr")]
    pub recalibrator: String,
    #[arg(long, default_value = "gaussian")]
    pub kernel: String,
    #[arg(long)]
    pub lambda: f64,
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Output prediction file for the recalibrated test scores.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub fit: FitArgs,
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("source").args(["config", "preset"])))]
pub struct SweepArgs {
    /// `key = value` config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Bundled protocol: `fig1` or `fig2`.
    #[arg(long)]
    pub preset: Option<String>,
    /// Override a config key, e.g. `--set seeds=3`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Worker threads; defaults to `SMCAL_WORKERS` or all cores.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    /// Aggregates CSV written by `sweep`.
    #[arg(long)]
    pub agg: PathBuf,
    /// Output directory for SVG files.
    #[arg(long)]
    pub out: PathBuf,
    /// Metrics to plot, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = ["smce".to_string(), "binned_ece".to_string(), "mmce".to_string(), "pgap_sq".to_string()])]
    pub metrics: Vec<String>,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io { .. } => 2,
        Error::Numerical { .. } | Error::Diverged { .. } => 3,
        Error::Input(_) | Error::DimensionMismatch { .. } | Error::Parse { .. } => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Generate(a) => commands::generate(&a),
        Command::Train(a) => commands::train(&a),
        Command::Evaluate(a) => commands::evaluate(&a),
        Command::Recalibrate(a) => commands::recalibrate(&a),
        Command::Sweep(a) => commands::sweep(&a),
        Command::Plot(a) => commands::plot(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
