//! `wallmem` command-line driver.

mod commands;
mod plot;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "wallmem", version, about = "Domain-wall memory in reverse-annealed spin rings")]
pub struct Cli {
    /// Master seed; overrides the config file.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for sweeps and embedding search.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run (or resume) a sweep, then analyse it.
    Run(RunArgs),
    /// Recompute metrics and fits from an archive.
    Analyze(AnalyzeArgs),
    /// Fit a metrics CSV.
    Fit(FitArgs),
    /// Fit the onset field against hold time across metrics CSVs.
    Scaling(ScalingArgs),
    /// Search a hardware graph for a long odd cycle.
    Embed(EmbedArgs),
    /// Plot metrics or density CSVs as SVG.
    Plot(PlotArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// `key=value` override, applied after loading; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Stop after this many new points.
    #[arg(long)]
    pub limit: Option<usize>,
    #[arg(long, value_enum, default_value_t = Aggregation::All)]
    pub aggregation: Aggregation,
    #[arg(long, value_enum, default_value_t = Axis::GammaOverJ)]
    pub fit_axis: Axis,
    #[arg(long, short)]
    pub quiet: bool,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub archive: PathBuf,
    #[arg(long, value_enum, default_value_t = Aggregation::All)]
    pub aggregation: Aggregation,
    #[arg(long, value_enum, default_value_t = Axis::GammaOverJ)]
    pub fit_axis: Axis,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub metrics: PathBuf,
    #[arg(long, value_enum, default_value_t = Axis::GammaOverJ)]
    pub axis: Axis,
}

#[derive(Debug, Args)]
pub struct ScalingArgs {
    #[arg(long, required = true, num_args = 1..)]
    pub metrics: Vec<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EmbedArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long, default_value_t = 3)]
    pub min_length: usize,
    /// Deterministic budget in search moves.
    #[arg(long, conflicts_with = "time_ms")]
    pub iterations: Option<u64>,
    /// Wall-clock budget; results vary with machine speed.
    #[arg(long)]
    pub time_ms: Option<u64>,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    #[arg(required = true, num_args = 1..)]
    pub inputs: Vec<PathBuf>,
    #[arg(long, value_enum, default_value_t = PlotKind::Entropy)]
    pub kind: PlotKind,
    #[arg(long, value_enum, default_value_t = Axis::GammaOverJ)]
    pub axis: Axis,
    /// Pause point of a density plot; defaults to the one nearest 0.5.
    #[arg(long)]
    pub s: Option<f64>,
    /// Output file; defaults to `<kind>.svg` in the output directory.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Aggregation {
    All,
    SingleWall,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Axis {
    GammaOverJ,
    Gamma,
    S,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PlotKind {
    Entropy,
    Sdwp,
    Density,
    Scaling,
}

/// Exit status 1 for bad input or configuration, 2 for failures while running.
#[derive(Debug)]
pub enum Failure {
    Config(String),
    Runtime(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 1,
            Failure::Runtime(_) => 2,
        }
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
    match commands::dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            let (Failure::Config(msg) | Failure::Runtime(msg)) = &failure;
            eprintln!("error: {msg}");
            ExitCode::from(failure.code())
        }
    }
}
