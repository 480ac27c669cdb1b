mod args;
mod commands;
mod config;

use std::process::ExitCode;

use clap::{CommandFactory, Parser};

use args::Cli;

/// Exit statuses.
pub const EXIT_PASS: u8 = 0;
pub const EXIT_ASSERTION: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_TRUNCATION: u8 = 3;

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Assertion(String),
    Truncation(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Assertion(_) => EXIT_ASSERTION,
            Failure::Truncation(_) => EXIT_TRUNCATION,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Assertion(m) | Failure::Truncation(m) => m,
        }
    }
}

impl From<modspace::Error> for Failure {
    fn from(e: modspace::Error) -> Self {
        use modspace::Error::*;
        match e {
            Truncation { .. } => Failure::Truncation(e.to_string()),
            Inconsistent { .. } => Failure::Assertion(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let argv = match config::merge_config(&Cli::command(), argv) {
        Ok(a) => a,
        Err(f) => {
            eprintln!("error: {}", f.message());
            return ExitCode::from(f.code());
        }
    };
    // clap exits with 2 on usage errors, 0 for --help/--version
    let cli = Cli::parse_from(argv);
    match commands::run(cli) {
        Ok(()) => ExitCode::from(EXIT_PASS),
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
