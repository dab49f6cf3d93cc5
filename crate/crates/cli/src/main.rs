//! `liftlab` command-line tool.
//!
//! Exit codes: 0 on success, 1 when a check or computation fails, 2 on
//! usage errors and bad graph specs.

mod args;
mod commands;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use commands::{CliError, Report};

fn run(cli: &Cli) -> Result<Report, CliError> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(CliError::Usage("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    match &cli.command {
        Command::Verify(a) => commands::verify(a),
        Command::Rate(a) => commands::rate(a),
        Command::Tune(a) => commands::tune(a),
        Command::Sweep(a) => commands::sweep_cmd(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::Mix(a) => commands::mix(a),
        Command::ExportMatrices(a) => commands::export(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(report) => {
            let text = if cli.json { report.json.to_string() } else { report.human };
            if report.to_stderr {
                eprintln!("{text}");
            } else {
                println!("{text}");
            }
            ExitCode::from(if report.ok { 0 } else { 1 })
        }
        Err(e) => {
            eprintln!("liftlab: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
