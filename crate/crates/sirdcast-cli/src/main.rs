//! Command-line entry point wiring ingestion, forecasting, uncertainty, and
//! backtesting into reproducible, config-driven runs.

mod commands;
mod config;
mod stage;

use std::path::PathBuf;
use std::process::ExitCode;

use chrono::NaiveDate;
use clap::{Parser, Subcommand};

use sirdcast::Error;

use crate::config::RunConfig;

#[derive(Parser)]
#[command(
    name = "sirdcast",
    about = "Time-dependent SIRD forecasting and backtesting for sub-regional epidemic data",
    version
)]
struct Cli {
    /// Run configuration file (TOML).
    #[arg(long, global = true, default_value = "sirdcast.toml")]
    config: PathBuf,

    /// Output directory; overrides the config's output.dir.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker-pool bound; overrides the config's workers key.
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Bootstrap seed; overrides the config's bootstrap.seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse the input snapshots and write normalized series plus anomalies.
    Ingest,
    /// Forecast one province from one origin date.
    Forecast {
        /// Province unit id.
        #[arg(long)]
        unit: String,
        /// Origin date (last observed day).
        #[arg(long)]
        as_of: NaiveDate,
        /// Days ahead; overrides the config's forecast.horizon.
        #[arg(long)]
        horizon: Option<usize>,
    },
    /// Forecast one province with bootstrap prediction intervals.
    Bootstrap {
        /// Province unit id.
        #[arg(long)]
        unit: String,
        /// Origin date (last observed day).
        #[arg(long)]
        as_of: NaiveDate,
        /// Days ahead; overrides the config's forecast.horizon.
        #[arg(long)]
        horizon: Option<usize>,
    },
    /// Run the rolling-origin backtest over the configured window.
    Backtest,
}

fn exit_code_for(error: &Error) -> u8 {
    match error {
        Error::Io(_) => 3,
        Error::Csv(e) if e.is_io_error() => 3,
        Error::InsufficientData { .. } => 4,
        _ => 2,
    }
}

fn run(cli: &Cli) -> sirdcast::Result<()> {
    let config = RunConfig::load(&cli.config)?;
    sirdcast::configure_workers(cli.workers.or(config.workers));
    let out_dir = cli.out.clone().unwrap_or_else(|| config.output.dir.clone());

    match &cli.command {
        Command::Ingest => commands::cmd_ingest(&config, &out_dir),
        Command::Forecast {
            unit,
            as_of,
            horizon,
        } => commands::cmd_forecast(&config, &out_dir, unit, *as_of, *horizon, cli.seed, false),
        Command::Bootstrap {
            unit,
            as_of,
            horizon,
        } => commands::cmd_forecast(&config, &out_dir, unit, *as_of, *horizon, cli.seed, true),
        Command::Backtest => commands::cmd_backtest(&config, &out_dir),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(error) => {
            eprintln!("error: {error}");
            ExitCode::from(exit_code_for(&error))
        }
    }
}
