mod args;
mod commands;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use commands::CliError;

fn init_threads(requested: Option<usize>) -> Result<(), CliError> {
    let from_env = match std::env::var("SCALELAWS_THREADS") {
        Ok(v) => Some(v.trim().parse::<usize>().map_err(|_| {
            CliError::usage(format!(
                "SCALELAWS_THREADS must be a positive integer, got {v:?}"
            ))
        })?),
        Err(_) => None,
    };
    match requested.or(from_env) {
        Some(0) => Err(CliError::usage("thread count must be at least 1")),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::usage(e.to_string())),
        None => Ok(()),
    }
}

fn run(cli: Cli) -> Result<u8, CliError> {
    init_threads(cli.threads)?;
    match cli.command {
        Command::Generate { kind } => commands::generate(kind),
        Command::Analyze(a) => commands::analyze(a),
        Command::Verify(v) => commands::verify(v),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
