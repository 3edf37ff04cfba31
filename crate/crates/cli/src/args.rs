use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "choquard",
    version,
    about = "Ground states of penalized fractional magnetic Choquard equations"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the penalized problem at the configured eps.
    Solve(RunArgs),
    /// Solve the limit problem and report its ground-state level.
    Limit(RunArgs),
    /// Solve along a descending eps list and check concentration.
    Sweep(SweepArgs),
    /// Run a named diagnostic on a stored field and print it as JSON.
    Check(CheckArgs),
    /// Write |u| along an axis or as a radial average to CSV.
    Export(ExportArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// JSON run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory (created if missing).
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides the solver seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides the number of grid points per axis.
    #[arg(long)]
    pub grid: Option<usize>,
    /// Overrides the gradient-norm tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Descending eps values, comma separated; overrides `eps_list` in the config.
    #[arg(long, value_delimiter = ',')]
    pub eps_list: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CheckName {
    Diamagnetic,
    Hls,
    Decay,
    Ray,
    NegativeRay,
    SmallShell,
    HartreeBound,
    Concentration,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    /// Stored field (`<name>.f64` with its `<name>.meta.json` sidecar).
    #[arg(long)]
    pub field: PathBuf,
    /// Diagnostic to run.
    #[arg(long, value_enum)]
    pub name: CheckName,
    /// Run configuration; defaults to `config.json` next to the field.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Seed for sampled diagnostics.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExportMode {
    Axis,
    Radial,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    /// Stored field.
    #[arg(long)]
    pub field: PathBuf,
    /// CSV destination; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Line through the maximum along the first axis, or shell averages around it.
    #[arg(long, value_enum, default_value_t = ExportMode::Axis)]
    pub mode: ExportMode,
}
