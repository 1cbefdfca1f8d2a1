//! `kelly-tails` command-line tool.

mod args;
mod commands;
mod config;
mod error;
mod output;
mod report;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::args::{EstimateArgs, FrontierArgs, ParityArgs, ScenarioArgs, SimulateArgs, SingleArgs, SweepArgs};
use crate::config::ConfigFile;
use crate::error::{CliError, CliResult};
use crate::report::{OutputFormat, Report};

/// Environment variable capping the worker threads (0 or unset = automatic).
const THREADS_ENV: &str = "KELLY_TAILS_THREADS";

#[derive(Debug, Parser)]
#[command(name = "kelly-tails", version, about = "Growth-optimal leverage with fat tails")]
struct Cli {
    /// TOML config file with one section per command
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for Monte Carlo commands (default 0)
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output format (default text)
    #[arg(long, global = true, value_enum)]
    output: Option<OutputFormat>,
    /// Write the report here (plus a `.meta.json` sidecar) instead of stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Kelly fraction and growth for one asset
    Single(SingleArgs),
    /// Kelly fraction along a grid of tail-loss sizes
    Sweep(SweepArgs),
    /// Multi-asset allocation, tangency equivalence and joint tails
    Parity(ParityArgs),
    /// Monte Carlo wealth paths at constant leverage
    Simulate(SimulateArgs),
    /// Compounding of a fixed run of bets
    Scenario(ScenarioArgs),
    /// Drawdown-protected efficient frontier
    Frontier(FrontierArgs),
    /// Fit the four-point model to a return series
    Estimate(EstimateArgs),
}

fn thread_count() -> CliResult<usize> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(0),
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| CliError::invalid(format!("{THREADS_ENV} must be a non-negative integer, got '{v}'"))),
    }
}

fn to_json<T: Serialize>(x: &T) -> CliResult<serde_json::Value> {
    serde_json::to_value(x).map_err(|e| CliError::invalid(e.to_string()))
}

fn dispatch(command: Command, cfg: ConfigFile, seed: u64) -> CliResult<(Report, serde_json::Value)> {
    use config::merge;
    match command {
        Command::Single(a) => {
            let p = merge(cfg.single, a)?.resolve()?;
            Ok((commands::single(&p)?, to_json(&p)?))
        }
        Command::Sweep(a) => {
            let p = merge(cfg.sweep, a)?.resolve()?;
            Ok((commands::sweep(&p)?, to_json(&p)?))
        }
        Command::Parity(a) => {
            let p = merge(cfg.parity, a)?.resolve()?;
            Ok((commands::parity(&p)?, to_json(&p)?))
        }
        Command::Simulate(a) => {
            let p = merge(cfg.simulate, a)?.resolve()?;
            Ok((commands::simulate(&p, seed)?, to_json(&p)?))
        }
        Command::Scenario(a) => {
            let p = merge(cfg.scenario, a)?.resolve()?;
            Ok((commands::scenario(&p)?, to_json(&p)?))
        }
        Command::Frontier(a) => {
            let p = merge(cfg.frontier, a)?.resolve()?;
            Ok((commands::frontier(&p, seed)?, to_json(&p)?))
        }
        Command::Estimate(a) => {
            let p = merge(cfg.estimate, a)?.resolve()?;
            Ok((commands::estimate(&p)?, to_json(&p)?))
        }
    }
}

fn run(cli: Cli) -> CliResult<()> {
    let threads = thread_count()?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Io(format!("cannot start worker threads: {e}")))?;

    let cfg = match &cli.config {
        Some(path) => config::load(path)?,
        None => ConfigFile::default(),
    };
    let seed = cli.seed.or(cfg.seed).unwrap_or(0);
    let format = cli.output.or(cfg.output).unwrap_or(OutputFormat::Text);
    let (report, params) = dispatch(cli.command, cfg, seed)?;
    let rendered = report.render(format);

    match &cli.out {
        Some(path) => {
            output::write_atomic(path, rendered.as_bytes())?;
            let meta = output::metadata(&report.command, seed, format, params);
            let mut text = serde_json::to_string_pretty(&meta).map_err(|e| CliError::invalid(e.to_string()))?;
            text.push('\n');
            output::write_atomic(&output::sidecar_path(path), text.as_bytes())?;
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(rendered.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| CliError::Io(format!("stdout: {e}")))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("kelly-tails: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
