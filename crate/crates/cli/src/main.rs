mod args;
mod commands;

use std::process::ExitCode;

use clap::Parser;

use crate::args::{Cli, Command};

/// Failure classes that map onto process exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config or inputs the user must fix: exit 2.
    Usage(String),
    /// Anything that failed while running: exit 1.
    Runtime(String),
}

impl From<winbow::Error> for CliError {
    fn from(e: winbow::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Train(a) => commands::train(a),
        Command::Match(a) => commands::match_targets(a),
        Command::Evaluate(a) => commands::evaluate(a),
        Command::SuggestN(a) => commands::suggest_n(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
