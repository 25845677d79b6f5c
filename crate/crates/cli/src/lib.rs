//! `flola` command-line front end.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.

use std::ffi::OsString;
use std::process::ExitCode;

use clap::Parser;
use thiserror::Error;

pub mod args;
pub mod commands;
pub mod files;

use args::{Cli, Command};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl From<flola::Error> for CliError {
    fn from(e: flola::Error) -> Self {
        use flola::Error as E;
        match e {
            E::Config(_) | E::Usage(_) | E::Domain(_) => CliError::Usage(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

pub fn execute(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Run(a) => commands::run(a),
        Command::Init(a) => commands::init(a),
        Command::Ask(a) => commands::ask(&a.dir),
        Command::Tell(a) => commands::tell(&a.dir),
        Command::NoiseReport(a) => commands::noise_report(a),
    }
}

/// Parses `argv` and runs the command, returning the process exit code.
pub fn main_with_args<I, T>(argv: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn main_from_env() -> ExitCode {
    ExitCode::from(main_with_args(std::env::args_os()))
}
