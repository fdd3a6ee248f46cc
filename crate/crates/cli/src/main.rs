//! `regionboot` command-line entry point.

mod args;
mod commands;
mod config;
mod error;
mod output;

use std::process::ExitCode;

use clap::Parser;

use crate::args::{Cli, Command};
use crate::error::CliError;

fn run(cli: Cli) -> Result<(), CliError> {
    let threads = config::threads_from_env()?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Io(anyhow::anyhow!("thread pool: {e}")))?;
    match &cli.command {
        Command::Pvalue(args) => commands::pvalue(args, threads),
        Command::Table(args) => commands::table(args, threads),
        Command::Curve(args) => commands::curve(args, threads),
        Command::Oracle(args) => commands::oracle(args, threads),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("regionboot: {err}");
            err.exit_code()
        }
    }
}
