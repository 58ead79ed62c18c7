//! Command-line front end: one binary, one subcommand per pipeline stage.
//! Every command writes `manifest.txt` next to its outputs.

mod commands;
mod export;
mod output;

use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

pub use export::to_long_format;
pub use output::{Manifest, OutputDir};

#[derive(Debug, Parser)]
#[command(name = "probmotion", version, about = "Probabilistic human-motion prediction and uncertainty-aware planning")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthesize motion files from a procedural family (A: gait, B: sit/stand).
    GenData(GenDataArgs),
    /// Convert a CSV of per-frame joint coordinates into a motion file.
    Convert(ConvertArgs),
    /// Train a model on a directory of motion files.
    Train(TrainArgs),
    /// Fit the epistemic-uncertainty threshold on held-out data.
    Calibrate(CalibrateArgs),
    /// Predict one window: samples, uncertainty, verdict and selection.
    Predict(PredictArgs),
    /// Compare predictors on a directory of motion files.
    Evaluate(EvaluateArgs),
    /// Plan a collision-averse path through a scene.
    Plan(PlanArgs),
    /// Turn any output CSV into a long `series,t_ms,value` table.
    ExportPlot(ExportPlotArgs),
}

#[derive(Debug, Args)]
pub struct GenDataArgs {
    pub family: String,
    pub seed: u64,
    pub n_sequences: usize,
    pub n_frames: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ConvertArgs {
    /// One frame per row, `3J` comma-separated coordinates; a non-numeric first row is a header.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Source frame rate, Hz.
    #[arg(long, default_value_t = 50.0)]
    pub rate: f64,
    /// Keep every k-th frame.
    #[arg(long, default_value_t = 2)]
    pub downsample: usize,
    /// Multiplier to meters (0.001 for millimeters).
    #[arg(long, default_value_t = 1.0)]
    pub scale: f64,
    /// Comma-separated source joint indices to keep, in order.
    #[arg(long)]
    pub joints: Option<String>,
    #[arg(long)]
    pub label: Option<String>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub val: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides `rng_seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// `key=value` file with TrainConfig keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Extra `key=value` overrides, applied after `--config`.
    #[arg(long = "set")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = crate::model::DEFAULT_MC_SAMPLES)]
    pub n_samples: usize,
    #[arg(long, default_value_t = 0.95)]
    pub quantile: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Window stride, frames; defaults to the checkpoint's window length.
    #[arg(long)]
    pub stride: Option<usize>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub calibration: Option<PathBuf>,
    /// Motion file holding the observed window.
    #[arg(long)]
    pub input: PathBuf,
    /// First observed frame (0-based).
    #[arg(long, default_value_t = 0)]
    pub start: usize,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = crate::model::DEFAULT_MC_SAMPLES)]
    pub n_samples: usize,
    #[arg(long, default_value_t = crate::uncertainty::DEFAULT_LAMBDA)]
    pub lambda: f64,
    #[arg(long, default_value_t = crate::uncertainty::DEFAULT_E_MAX)]
    pub e_max: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long)]
    pub calibration: Option<PathBuf>,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// `+` or `,` separated: zerovel, det, fmp, fmp_umd, fmp_umd_oms.
    #[arg(long, default_value = "zerovel+fmp+fmp_umd+fmp_umd_oms")]
    pub methods: String,
    #[arg(long, default_value_t = crate::model::DEFAULT_MC_SAMPLES)]
    pub n_samples: usize,
    #[arg(long, default_value_t = crate::uncertainty::DEFAULT_LAMBDA)]
    pub lambda: f64,
    #[arg(long, default_value_t = crate::uncertainty::DEFAULT_E_MAX)]
    pub e_max: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub stride: Option<usize>,
    /// Observed frames per window (defaults to the checkpoint's, else 50).
    #[arg(long)]
    pub t_p: Option<usize>,
    /// Future frames per window (defaults to the checkpoint's, else 50).
    #[arg(long)]
    pub horizon: Option<usize>,
    /// Comma-separated milestones, milliseconds.
    #[arg(long, default_value = "400,800,1200,1600,2000")]
    pub milestones: String,
    /// Drop selector predictions past their trustworthy length.
    #[arg(long)]
    pub truncate: bool,
    /// Score plain ensembles by the mean of member errors.
    #[arg(long)]
    pub mean_of_errors: bool,
    #[arg(long, default_value = "-")]
    pub train_set: String,
    #[arg(long, default_value = "-")]
    pub test_set: String,
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    #[arg(long)]
    pub scene: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// `key=value` PlanConfig overrides.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Build the field from a prediction instead of the scene's Gaussians.
    #[arg(long, requires = "input")]
    pub checkpoint: Option<PathBuf>,
    #[arg(long, requires = "checkpoint")]
    pub input: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub start: usize,
    #[arg(long, default_value_t = crate::model::DEFAULT_MC_SAMPLES)]
    pub n_samples: usize,
    #[arg(long, default_value_t = crate::uncertainty::DEFAULT_LAMBDA)]
    pub lambda: f64,
    #[arg(long, default_value_t = crate::uncertainty::DEFAULT_E_MAX)]
    pub e_max: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct ExportPlotArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Frame rate used when the table has a `frame` column but no `t_ms`.
    #[arg(long, default_value_t = crate::data::DEFAULT_FRAME_RATE_HZ)]
    pub rate: f64,
}

/// Runs a parsed command; `argv` is recorded in the manifest.
pub fn run(cli: Cli, argv: &[String]) -> Result<()> {
    match cli.command {
        Command::GenData(a) => commands::gen_data(a, argv),
        Command::Convert(a) => commands::convert(a, argv),
        Command::Train(a) => commands::train(a, argv),
        Command::Calibrate(a) => commands::calibrate(a, argv),
        Command::Predict(a) => commands::predict(a, argv),
        Command::Evaluate(a) => commands::evaluate(a, argv),
        Command::Plan(a) => commands::plan(a, argv),
        Command::ExportPlot(a) => export::export_plot(a, argv),
    }
}
