mod args;
mod commands;
mod problem;
mod sweep;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

/// Failures mapped onto the documented exit codes.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Lib(fairalloc::Error),
    /// `check` found a violated guarantee.
    CheckFailed,
}

impl From<fairalloc::Error> for CliError {
    fn from(e: fairalloc::Error) -> Self {
        CliError::Lib(e)
    }
}

impl CliError {
    fn code(&self) -> u8 {
        use fairalloc::Error as E;
        match self {
            CliError::Usage(_) => 64,
            CliError::CheckFailed => 1,
            CliError::Lib(e) if e.is_infeasible() => 2,
            CliError::Lib(E::NonConvergence { .. }) => 3,
            CliError::Lib(E::Io { .. }) => 66,
            CliError::Lib(E::Parse { .. } | E::MissingCell { .. }) => 65,
            CliError::Lib(E::Invalid { .. } | E::Dimension { .. } | E::ZeroRequirement { .. }) => {
                65
            }
            CliError::Lib(_) => 70,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage: {m}"),
            CliError::Lib(e) => write!(f, "{e}"),
            CliError::CheckFailed => write!(f, "property check failed"),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 64 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if cli.sequential {
        fairalloc::par::set_sequential(true);
    }
    let out = match cli.command {
        Command::Solve(a) => commands::solve(a),
        Command::Compare(a) => commands::compare(a),
        Command::Sweep(a) => sweep::run(a),
        Command::Bounds(a) => commands::bounds(a),
        Command::Check(a) => commands::check(a),
        Command::Gen(a) => commands::gen(a),
        Command::Preset(a) => commands::preset(a),
    };
    match out {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fairalloc: {e}");
            ExitCode::from(e.code())
        }
    }
}
