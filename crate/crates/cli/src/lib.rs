//! Command-line front end for `halfcert`: dataset generation, certification,
//! learning runs, verification suites and parameter sweeps.
//!
//! Exit codes: 0 success, 1 I/O or runtime failure, 2 usage or validation
//! failure.

use std::fmt;

pub mod commands;
pub mod config;

pub use config::{ExperimentConfig, RawConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "HALFCERT_OUT";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    pub fn runtime(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_RUNTIME,
            message: message.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<halfcert::Error> for CliError {
    fn from(e: halfcert::Error) -> Self {
        use halfcert::Error as E;
        match e {
            E::Io(_)
            | E::Csv(_)
            | E::Parse(_)
            | E::EmptyInput(_)
            | E::EigenFailure { .. }
            | E::NotSymmetric(_) => CliError::runtime(e.to_string()),
            _ => CliError::usage(e.to_string()),
        }
    }
}
