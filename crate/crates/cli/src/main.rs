//! `moyal` command-line front end.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage or input error,
//! 3 numerical guard.

mod args;
mod commands;
mod config;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command};
use config::Settings;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(moyal::Error),
    /// The verification report was written and at least one row failed.
    VerifyFailed,
}

impl From<moyal::Error> for CliError {
    fn from(e: moyal::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(e.into())
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::VerifyFailed => 1,
            CliError::Usage(_) => 2,
            CliError::Core(e) if e.is_numerical_guard() => 3,
            CliError::Core(_) => 2,
        }
    }

    fn report(&self) {
        match self {
            CliError::VerifyFailed => eprintln!("verification failed"),
            CliError::Usage(m) => eprintln!("error: {m}\n\nFor more information, try '--help'."),
            CliError::Core(e) => match e.guard_name() {
                Some(g) => eprintln!("error: numerical guard '{g}' tripped: {e}"),
                None => eprintln!("error: {e}"),
            },
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let settings = Settings::resolve(&cli.global)?;
    if let Some(n) = settings.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("--threads: {e}")))?;
    }
    match &cli.command {
        Command::Wigner(a) => commands::wigner(&settings, a),
        Command::Starexp(a) => commands::starexp(&settings, a),
        Command::Evolve(a) => commands::evolve(&settings, a),
        Command::Tau(a) => commands::tau(&settings, a),
        Command::Invariant(a) => commands::invariant(&settings, a),
        Command::Verify(a) => commands::verify(&settings, a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            e.report();
            ExitCode::from(e.exit_code())
        }
    }
}
