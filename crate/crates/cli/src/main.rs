//! polymerlab: config-driven experiment runner for directed-polymer
//! endpoint simulations and their measure-space diagnostics.

mod commands;
mod config;
mod plot;

use std::path::PathBuf;

use anyhow::Result;
use clap::{Parser, Subcommand};

use config::ExperimentConfig;

#[derive(Parser)]
#[command(
    name = "polymerlab",
    about = "Exact endpoint distributions and localization statistics for directed polymers in random environment",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run trajectories and write per-step diagnostics
    Simulate(CommonArgs),
    /// Sweep a beta grid and write per-beta summaries
    Scan(CommonArgs),
    /// Extract a profile decomposition from a snapshot sequence
    Profiles(CommonArgs),
    /// Compare the exact metric oracle against the scalable upper bound
    MetricCheck(CommonArgs),
    /// Fixed-point residuals of the update map along a trajectory
    FixedPoint(CommonArgs),
    /// Render CSV series to an SVG chart
    Plot(CommonArgs),
}

#[derive(clap::Args)]
struct CommonArgs {
    /// Experiment configuration (JSON)
    #[arg(long)]
    config: PathBuf,
    /// Output directory (default: "out")
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads (fallback: POLYMERLAB_WORKERS, then all cores)
    #[arg(long)]
    workers: Option<usize>,
}

fn main() {
    let cli = Cli::parse();
    if let Err(err) = run(cli) {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> Result<()> {
    let args = match &cli.command {
        Command::Simulate(a)
        | Command::Scan(a)
        | Command::Profiles(a)
        | Command::MetricCheck(a)
        | Command::FixedPoint(a)
        | Command::Plot(a) => a,
    };
    let workers = args
        .workers
        .or_else(|| {
            std::env::var("POLYMERLAB_WORKERS")
                .ok()
                .and_then(|v| v.parse().ok())
        })
        .unwrap_or(0); // 0 = rayon default (all cores)
    if workers > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global()
            .ok();
    }
    let config = ExperimentConfig::load(&args.config)?;
    match &cli.command {
        Command::Simulate(a) => commands::simulate(&config, &a.out),
        Command::Scan(a) => commands::scan(&config, &a.out),
        Command::Profiles(a) => commands::profiles(&config, &a.out),
        Command::MetricCheck(a) => commands::metric_check(&config, &a.out),
        Command::FixedPoint(a) => commands::fixed_point(&config, &a.out),
        Command::Plot(a) => commands::plot(&config, &a.out),
    }
}
