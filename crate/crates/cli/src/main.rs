//! Command-line entry point wiring configuration, datasets, the pipeline
//! stages, and report writers.

mod commands;
mod config;
mod inputs;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use config::{CommonArgs, RunConfig};

#[derive(Parser)]
#[command(
    name = "stereofuse",
    version,
    about = "Census/SGM stereo disparity estimation fused with sparse range seeds"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate disparity and write PFM/PNG artifacts plus a report.
    Run(CommonArgs),
    /// Sweep methods and seed fractions over a dataset into an aggregate CSV.
    Bench(CommonArgs),
    /// Write the per-sample sweep table without aggregate rows.
    Sweep(SweepArgs),
    /// Project a 16-bit depth image through a calibration into a seed file.
    Convert(ConvertArgs),
    /// Print header summaries of PFM and PNG files.
    Inspect(InspectArgs),
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,

    /// Restrict the sweep to one sample by name.
    #[arg(long, value_name = "NAME")]
    sample: Option<String>,
}

#[derive(Args)]
pub struct ConvertArgs {
    /// 16-bit grayscale depth PNG to convert.
    #[arg(long, value_name = "FILE")]
    input: PathBuf,

    /// Calibration file providing the focal length and baseline.
    #[arg(long, value_name = "FILE")]
    calib: Option<PathBuf>,

    /// Focal length in pixels (overrides the calibration file).
    #[arg(long)]
    focal: Option<f32>,

    /// Baseline in meters (overrides the calibration file).
    #[arg(long)]
    baseline: Option<f32>,

    /// Meters per raw depth unit; the default reads millimeter depth maps.
    #[arg(long, default_value_t = 0.001)]
    depth_unit: f32,

    /// Disparity range bound; depths projecting beyond it are dropped.
    #[arg(long, default_value_t = 256)]
    dmax: usize,

    /// Keep every nth valid depth pixel.
    #[arg(long, default_value_t = 1)]
    step: usize,

    /// Output seed file.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
}

#[derive(Args)]
pub struct InspectArgs {
    /// Files to describe (.pfm or .png).
    #[arg(required = true, value_name = "FILE")]
    files: Vec<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Run(args) => {
            let cfg = RunConfig::resolve(&args)?;
            init_workers(cfg.workers)?;
            commands::run(&cfg)
        }
        Command::Bench(args) => {
            let cfg = RunConfig::resolve(&args)?;
            init_workers(cfg.workers)?;
            commands::bench(&cfg)
        }
        Command::Sweep(args) => {
            let cfg = RunConfig::resolve(&args.common)?;
            init_workers(cfg.workers)?;
            commands::sweep(&cfg, args.sample.as_deref())
        }
        Command::Convert(args) => commands::convert(&args),
        Command::Inspect(args) => commands::inspect(&args),
    }
}

/// Sizes the global worker pool; when unset rayon defaults to the machine's
/// available parallelism.
fn init_workers(workers: Option<usize>) -> anyhow::Result<()> {
    if let Some(n) = workers {
        anyhow::ensure!(n >= 1, "--workers must be at least 1");
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("initializing the worker pool")?;
    }
    Ok(())
}
