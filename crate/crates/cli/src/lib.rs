//! Command-line front end for the `sisctl` library.

use std::fmt;
use std::path::Path;

pub mod commands;
pub mod manifest;
pub mod oracle;
pub mod output;
pub mod runner;
pub mod svg;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_INVARIANT: i32 = 2;
pub const EXIT_INPUT: i32 = 3;
pub const EXIT_SOLVER: i32 = 4;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn new(code: i32, message: impl Into<String>) -> Self {
        CliError {
            code,
            message: message.into(),
        }
    }

    pub fn internal(message: impl Into<String>) -> Self {
        CliError::new(EXIT_INTERNAL, message)
    }

    pub fn input(message: impl Into<String>) -> Self {
        CliError::new(EXIT_INPUT, message)
    }

    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::input(format!("{}: {e}", path.display()))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<sisctl::Error> for CliError {
    fn from(e: sisctl::Error) -> Self {
        use sisctl::Error as E;
        let code = match e {
            E::InvariantViolation { .. } => EXIT_INVARIANT,
            E::Numeric { .. } | E::Stalled { .. } => EXIT_SOLVER,
            E::NodeOutOfRange { .. }
            | E::Domain(_)
            | E::Capacity { .. }
            | E::Structure(_)
            | E::Contract(_)
            | E::Parse { .. } => EXIT_INPUT,
        };
        CliError::new(code, e.to_string())
    }
}
