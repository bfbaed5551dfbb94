use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use tempora::training::{Preset, Scale};

use crate::REFERENCE_DATA_SEED;

#[derive(Debug, Parser)]
#[command(name = "tempora", version, about = "Multivariate LSTM temperature forecasting")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Clean a CSV (or generate a synthetic station) and fit normalization stats.
    Prepare(PrepareArgs),
    /// Train a preset and write checkpoint, loss history and manifest.
    Train(TrainArgs),
    /// Forecast one window from a checkpoint and plot it.
    Forecast(ForecastArgs),
    /// Score a checkpoint on the held-out split and append to metrics.csv.
    Evaluate(EvaluateArgs),
    /// Run the gradient and oracle checks.
    Check(CheckArgs),
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// Weather CSV with a datetime column and any of temp, hum, airpr, solrad, windvel, winddir.
    #[arg(long, conflicts_with = "synthetic")]
    pub data: Option<PathBuf>,
    /// Synthetic station: a number of years, or a JSON spec file.
    #[arg(long)]
    pub synthetic: Option<String>,
    /// Seed of the synthetic station when `--synthetic` gives a year count.
    #[arg(long, default_value_t = REFERENCE_DATA_SEED)]
    pub data_seed: u64,
}

#[derive(Debug, Args)]
pub struct PrepareArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value = "prepared")]
    pub out: PathBuf,
    /// Fraction of rows (from the start) used to fit the statistics.
    #[arg(long, default_value_t = 0.78)]
    pub train_fraction: f64,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long, default_value = "run1-7day")]
    pub preset: Preset,
    /// Flat `key = value` file applied on top of the preset.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    /// `desk` shrinks batches, steps and epochs and defaults to 2 synthetic years.
    #[arg(long, default_value = "full")]
    pub scale: Scale,
    /// Re-run a previous manifest and verify its artifact hashes.
    #[arg(long, conflicts_with_all = ["config", "seed"])]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ForecastArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Defaults to the data recorded in the manifest beside the checkpoint.
    #[command(flatten)]
    pub data: DataArgs,
    /// First forecast hour; defaults to the start of the held-out split.
    #[arg(long)]
    pub at: Option<String>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Row label in metrics.csv; defaults to the config name.
    #[arg(long)]
    pub label: Option<String>,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    /// Random configurations per layer family.
    #[arg(long, default_value_t = 20)]
    pub seeds: u64,
    /// Corrupt one analytic gradient, e.g. `lstm.recurrent`.
    #[arg(long, hide = true)]
    pub inject_fault: Option<String>,
}
