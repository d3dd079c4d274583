//! `bellsim`: run, analyze and audit Bell-test simulations.
//!
//! Exit codes: 0 success, 1 domain error, 2 configuration or usage error.
//! `BELL_THREADS` sets the worker count; results do not depend on it.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use bellsim_core::Error;
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "bellsim",
    version,
    about = "Bell-test hidden-variable simulator and analyzer"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigOut {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a dataset from a model and protocol.
    Simulate(ConfigOut),
    /// Compute statistics of a dataset.
    Analyze {
        /// Dataset CSV; its `.provenance.json` sidecar must sit next to it.
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Coincidence window for stream datasets.
        #[arg(long)]
        window: Option<f64>,
        #[arg(long)]
        post_select: bool,
        #[arg(long)]
        chsh: bool,
        #[arg(long)]
        eberhard: bool,
        #[arg(long)]
        nosignaling: bool,
        #[arg(long)]
        cbd: bool,
    },
    /// Violation frequency over seeded replications.
    Replicate(ConfigOut),
    /// CHSH value and retained fraction as functions of the coincidence window.
    WindowScan(ConfigOut),
    /// Joint-probability feasibility of a pairwise table (CSV or JSON).
    CheckJp {
        #[arg(long)]
        table: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Summarize every output under a directory.
    Report {
        #[arg(long)]
        out: PathBuf,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Invalid { .. } | Error::Json(_) | Error::Io { .. } => 2,
        _ => 1,
    }
}

fn init_threads() -> Result<(), Error> {
    let Ok(value) = std::env::var("BELL_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| {
            Error::invalid(
                "BELL_THREADS",
                format!("expected a positive integer, got `{value}`"),
            )
        })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::invalid("BELL_THREADS", e.to_string()))
}

fn run(cli: Cli) -> Result<(), Error> {
    init_threads()?;
    match cli.command {
        Command::Simulate(a) => commands::simulate(&a.config, &a.out),
        Command::Analyze {
            dataset,
            out,
            window,
            post_select,
            chsh,
            eberhard,
            nosignaling,
            cbd,
        } => {
            let mut flags = commands::AnalyzeFlags {
                post_select,
                chsh,
                eberhard,
                nosignaling,
                cbd,
            };
            if !(chsh || eberhard || nosignaling || cbd) {
                flags.chsh = true;
            }
            commands::analyze(&dataset, flags, window, &out)
        }
        Command::Replicate(a) => commands::replicate(&a.config, &a.out),
        Command::WindowScan(a) => commands::window_scan_cmd(&a.config, &a.out),
        Command::CheckJp { table, out } => commands::check_jp(&table, &out),
        Command::Report { out } => commands::report(&out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
