//! Experiment runner around `blochscan-core`: deterministic, seeded
//! subcommands that emit plot-ready CSV or JSON.

pub mod commands;
pub mod config;
pub mod output;
pub mod sampling;

use std::process::ExitCode;

/// Process exit codes: 0 success, 1 usage/config error, 2 internal
/// assertion failure, 3 capacity error.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Assertion(String),
    Capacity(String),
}

impl CliError {
    fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Usage(_) => ExitCode::from(1),
            CliError::Assertion(_) => ExitCode::from(2),
            CliError::Capacity(_) => ExitCode::from(3),
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Assertion(m) | CliError::Capacity(m) => m,
        }
    }
}

impl From<blochscan_core::Error> for CliError {
    fn from(e: blochscan_core::Error) -> Self {
        match e {
            blochscan_core::Error::Capacity { .. } => CliError::Capacity(e.to_string()),
            other => CliError::Usage(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Usage(format!("io error: {e}"))
    }
}

pub fn run() -> ExitCode {
    let cli = match config::parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap already prints its own message for --help/--version.
            let code = e.exit_code();
            let _ = e.print();
            return if code == 0 {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            };
        }
    };
    match commands::dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.exit_code()
        }
    }
}
