//! `rcme` — batch harness for integer motion estimation experiments with
//! rate-constrained candidate elimination.
//!
//! Exit codes: 0 on success, 2 on configuration errors, 3 on I/O or input
//! decode errors.

mod commands;
mod config;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{ExperimentConfig, RunFlags};

#[derive(thiserror::Error, Debug)]
pub enum AppError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Io(String),
}

impl AppError {
    fn exit_code(&self) -> u8 {
        match self {
            AppError::Config(_) => 2,
            AppError::Io(_) => 3,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "rcme",
    version,
    about = "Integer motion estimation benchmark with rate-constrained candidate elimination"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment over the input clip(s) and write CSV/JSON reports.
    Run {
        #[command(flatten)]
        flags: RunFlags,
        /// Output directory for report files.
        #[arg(long)]
        out: PathBuf,
        /// Worker threads (0 = auto). Results are identical for any value.
        #[arg(long, default_value_t = 0)]
        threads: usize,
    },
    /// Run two configs on identical inputs and report complexity and BD-rate deltas.
    Compare {
        /// Baseline config file.
        #[arg(long)]
        config_a: PathBuf,
        /// Modified config file.
        #[arg(long)]
        config_b: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        threads: usize,
    },
    /// Emit the MVD rate surface with optional contour masks.
    Surface {
        /// Window radius in pels.
        #[arg(long)]
        radius: u32,
        /// Comma-separated rate thresholds to emit region masks for.
        #[arg(long, value_delimiter = ',')]
        contours: Vec<u32>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run motion estimation and emit the MVP-relative decision heatmap
    /// plus its correlation with the rate surface.
    Heatmap {
        #[command(flatten)]
        flags: RunFlags,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        threads: usize,
    },
}

fn dispatch(cli: Cli, argv: &[String]) -> Result<(), AppError> {
    match cli.command {
        Command::Run { flags, out, threads } => {
            let cfg = ExperimentConfig::resolve(&flags)?;
            commands::cmd_run(&cfg, threads, &out, argv)
        }
        Command::Compare { config_a, config_b, out, threads } => {
            commands::cmd_compare(&config_a, &config_b, threads, &out, argv)
        }
        Command::Surface { radius, contours, out } => {
            commands::cmd_surface(radius, &contours, &out, argv)
        }
        Command::Heatmap { flags, out, threads } => {
            let cfg = ExperimentConfig::resolve(&flags)?;
            commands::cmd_heatmap(&cfg, threads, &out, argv)
        }
    }
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = Cli::parse();
    match dispatch(cli, &argv) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
