//! `twophoton`: sweeps, Wigner grids, criticality reports and Langevin runs
//! written as CSV or JSON.
//!
//! Exit status: 0 success, 1 usage error, 2 numerical failure (including
//! tables written with failed cells), 3 validation-suite failure.

mod args;
mod commands;
mod config;
mod error;
mod output;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command};
use commands::Outcome;
use config::{CriticalSpec, FileConfig, SimulateSpec, SweepSpec, WignerSpec};
use error::{usage, CliError};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("twophoton: {e}");
            e.exit_code()
        }
    }
}

fn finish(outcome: Outcome, cli: &Cli, format: args::Format) -> Result<(), CliError> {
    outcome.document.emit(format, cli.out.as_deref())?;
    if outcome.failures > 0 {
        return Err(CliError::Numerical(format!(
            "{} cells failed; see the *_status columns",
            outcome.failures
        )));
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let format = file.format(cli.format)?;
    if let Some(threads) = cli.threads.or(file.threads) {
        if threads == 0 {
            return Err(usage("threads must be >= 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| usage(format!("cannot start {threads} threads: {e}")))?;
    }

    if cli.check || cli.full {
        if cli.command.is_some() {
            return Err(usage("--check and --full take no subcommand"));
        }
        let (text, ok) = commands::check(cli.full);
        match &cli.out {
            Some(p) => std::fs::write(p, &text)
                .map_err(|e| CliError::Numerical(format!("cannot write {}: {e}", p.display())))?,
            None => print!("{text}"),
        }
        return if ok {
            Ok(())
        } else {
            Err(CliError::Check("see the FAIL lines above".into()))
        };
    }

    let command = cli
        .command
        .as_ref()
        .ok_or_else(|| usage("a subcommand, --check or --full is required"))?;
    match command {
        Command::Sweep(a) => {
            let spec = SweepSpec::resolve(a.layer(), a.trajectory.layer(), &file, cli.preset)?;
            finish(commands::sweep(&spec), &cli, format)
        }
        Command::Critical(a) => {
            let spec = CriticalSpec::resolve(a.layer(), a.trajectory.layer(), &file, cli.preset)?;
            finish(commands::critical(&spec), &cli, format)
        }
        Command::Wigner(a) => {
            let spec = WignerSpec::resolve(a.layer(), &file, cli.preset)?;
            commands::wigner(&spec)?.emit(format, cli.out.as_deref())
        }
        Command::Simulate(a) => {
            let spec = SimulateSpec::resolve(a.layer(), a.trajectory.layer(), &file, cli.preset)?;
            commands::simulate(&spec)?.emit(format, cli.out.as_deref())
        }
    }
}
