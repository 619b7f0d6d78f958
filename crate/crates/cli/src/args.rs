//! Command-line arguments. Every subcommand option is optional so that a
//! config file can fill it in; defaults are applied last.

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(name = "swarmtsc", version, about = "Swarm tactic classification pipeline")]
pub struct Cli {
    /// TOML file with one table per subcommand, e.g. `[train]`.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Manifest path; defaults to `<primary output>.manifest.json`.
    #[arg(long, global = true)]
    pub manifest: Option<PathBuf>,
    /// error, warn, info, debug or trace.
    #[arg(long, global = true, default_value = "info")]
    pub log_level: String,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate engagements into a trajectory container.
    Simulate(SimulateArgs),
    /// Truncate, split, window, add noise and normalize trajectories.
    BuildDataset(BuildArgs),
    /// Train one classifier and score it on the test split.
    Train(TrainArgs),
    /// Score a checkpoint on a dataset.
    Evaluate(EvaluateArgs),
    /// Window, noise or swarm-size sweep to CSV.
    Sweep(SweepArgs),
    /// Step-0 targeting trajectories of all four tactics from one seed.
    Opening(OpeningArgs),
    /// Principal-component projection of a dataset.
    Pca(PcaArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Simulate(_) => "simulate",
            Command::BuildDataset(_) => "build-dataset",
            Command::Train(_) => "train",
            Command::Evaluate(_) => "evaluate",
            Command::Sweep(_) => "sweep",
            Command::Opening(_) => "opening",
            Command::Pca(_) => "pca",
        }
    }
}

/// Shared training options.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct TrainOpts {
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub patience: Option<usize>,
    #[arg(long)]
    pub momentum: Option<f64>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct SimulateArgs {
    /// `all` or a comma list such as `greedy,auction+`.
    #[arg(long)]
    pub tactic: Option<String>,
    #[arg(long)]
    pub na: Option<usize>,
    #[arg(long)]
    pub nd: Option<usize>,
    /// Engagements per tactic.
    #[arg(long)]
    pub instances: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub max_steps: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct BuildArgs {
    /// Trajectory containers; repeat the flag to merge several.
    #[arg(long = "in")]
    #[serde(rename = "in", default)]
    pub inputs: Vec<PathBuf>,
    /// Steps kept from the start, or `full`.
    #[arg(long)]
    pub window: Option<String>,
    /// Noise standard deviation as a percent of the characteristic lengths.
    #[arg(long)]
    pub noise_factor: Option<f64>,
    /// `matched` (all splits noisy) or `clean-train` (only test noisy).
    #[arg(long)]
    pub noise_protocol: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct TrainArgs {
    /// logreg, fc, cnn or fcn.
    #[arg(long)]
    pub model: Option<String>,
    /// mc (tactic), ml (attributes) or mh (both).
    #[arg(long)]
    pub output: Option<String>,
    /// Must match a dataset's window; applied when `--data` holds trajectories.
    #[arg(long)]
    pub window: Option<String>,
    /// Dataset or trajectory container.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Used for dataset building (trajectory input) and for training.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Applied when `--data` holds trajectories.
    #[arg(long)]
    pub noise_factor: Option<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub train: TrainOpts,
    /// Checkpoint path.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Training report; defaults to `<out>.report.json`.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Keep wall-clock times in the report.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub timing: Option<bool>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct EvaluateArgs {
    #[arg(long)]
    pub model_ckpt: Option<PathBuf>,
    /// Dataset container.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Metrics JSON; defaults to `<model-ckpt>.eval.json`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct SweepArgs {
    /// window, noise or size.
    #[arg(long)]
    pub kind: Option<String>,
    /// Trajectory container (window and noise sweeps).
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Comma list of `<model>-<output>` entries.
    #[arg(long)]
    pub models: Option<String>,
    /// Window sweep values, e.g. `20,full`.
    #[arg(long)]
    pub windows: Option<String>,
    /// Noise sweep factors, e.g. `0,10,20,30,40,50`.
    #[arg(long)]
    pub factors: Option<String>,
    /// Swarm sizes, e.g. `10,25,50`.
    #[arg(long)]
    pub sizes: Option<String>,
    /// Adds 75v75 and 100v100 to the size sweep.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub large: Option<bool>,
    /// Engagements per tactic for the size sweep.
    #[arg(long)]
    pub instances: Option<usize>,
    /// Window used by noise and size sweeps.
    #[arg(long)]
    pub window: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub train: TrainOpts,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Record wall-clock seconds instead of 0.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub timing: Option<bool>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct OpeningArgs {
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub na: Option<usize>,
    #[arg(long)]
    pub nd: Option<usize>,
    /// Trajectory rows.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Step-0 check table; defaults to `<out>.checks.csv`.
    #[arg(long)]
    pub checks: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct PcaArgs {
    /// Dataset container.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// 2 or 3.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}
