//! Command-line front end for `dml-core`.
//!
//! [`run`] parses arguments, dispatches to a subcommand and maps the outcome
//! to a process exit code:
//!
//! | code | meaning |
//! |------|---------|
//! | 0    | success; feasibility found a common fine-graining |
//! | 1    | infeasible |
//! | 2    | undecided (feasibility or critical efficiency) |
//! | 64   | usage error, invalid parameter |
//! | 65   | unreadable or malformed input data |
//! | 66   | bracket is malformed or does not straddle the threshold |
//! | 74   | output could not be written |
//! | 70   | anything else |

pub mod args;
mod commands;
mod output;

use std::ffi::OsString;

use clap::error::ErrorKind;
use clap::Parser;

pub use args::Cli;
pub use output::{parse_bracket, parse_grid, RunManifest};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INFEASIBLE: i32 = 1;
pub const EXIT_UNDECIDED: i32 = 2;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_DATA: i32 = 65;
pub const EXIT_BRACKET: i32 = 66;
pub const EXIT_SOFTWARE: i32 = 70;
pub const EXIT_IO: i32 = 74;

/// Input that exists but cannot be understood.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct DataError(pub String);

/// A `--bracket` that cannot be parsed.
#[derive(Debug, thiserror::Error)]
#[error("invalid bracket: {0}")]
pub struct BracketError(pub String);

/// A bad flag value caught after parsing.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct UsageError(pub String);

/// Output that could not be written.
#[derive(Debug, thiserror::Error)]
#[error("cannot write {path}: {source}")]
pub struct OutputError {
    pub path: String,
    #[source]
    pub source: std::io::Error,
}

pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
        }
    };
    let command_line: Vec<String> = argv.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    match commands::dispatch(cli.command, command_line) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            exit_code_for(&e)
        }
    }
}

fn exit_code_for(e: &anyhow::Error) -> i32 {
    use dml_core::Error as Core;
    for cause in e.chain() {
        if cause.is::<DataError>() {
            return EXIT_DATA;
        }
        if cause.is::<BracketError>() {
            return EXIT_BRACKET;
        }
        if cause.is::<UsageError>() {
            return EXIT_USAGE;
        }
        if cause.is::<OutputError>() {
            return EXIT_IO;
        }
        if let Some(core) = cause.downcast_ref::<Core>() {
            return match core {
                Core::BracketDoesNotStraddle { .. } => EXIT_BRACKET,
                Core::InvalidState(_) => EXIT_DATA,
                _ => EXIT_USAGE,
            };
        }
    }
    EXIT_SOFTWARE
}
