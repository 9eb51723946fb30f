//! `cmvflows`: batch front-end that reads a JSON experiment configuration,
//! runs one library operation and writes CSV or JSON results.
//!
//! Exit status is 0 on success, 2 for configuration errors and 3 for
//! numerical failures (including a failed `verify`). The environment variable
//! `CMVFLOWS_THREADS` caps the number of worker threads.

mod commands;
mod config;
mod error;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use crate::commands::run;
use crate::config::{Command, ExperimentConfig};
use crate::error::CliError;

/// Periodic Ablowitz–Ladik flows on Floquet CMV matrices.
#[derive(Debug, Parser)]
#[command(name = "cmvflows", version, about)]
struct Args {
    /// Operation to run.
    #[arg(value_enum)]
    command: Command,
    /// JSON experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Where to write the main result (standard output if absent).
    #[arg(long)]
    output: Option<PathBuf>,
    /// Seed for randomized checks, overriding the configuration.
    #[arg(long)]
    seed: Option<u64>,
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var("CMVFLOWS_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("CMVFLOWS_THREADS = {value:?} is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(format!("cannot size the thread pool: {e}")))
}

fn execute(args: &Args) -> Result<(), CliError> {
    configure_threads()?;
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", args.config.display())))?;
    let config = ExperimentConfig::from_json(&text)?;
    let emit = run(args.command, &config, args.seed)?;
    let output = args.output.clone().or_else(|| config.output.clone());
    let stderr = std::io::stderr();
    for line in &emit.log {
        let _ = writeln!(stderr.lock(), "{line}");
    }
    match output {
        Some(path) => {
            std::fs::write(&path, &emit.body).map_err(|source| CliError::Output {
                path: path.display().to_string(),
                source,
            })?;
            if let Some(side) = &emit.side {
                print!("{side}");
            }
        }
        None => {
            print!("{}", emit.body);
            if let Some(side) = &emit.side {
                eprint!("{side}");
            }
        }
    }
    match emit.failure {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    match execute(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("cmvflows {}: {e}", args.command.name());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
