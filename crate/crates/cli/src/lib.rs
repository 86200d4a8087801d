//! Library side of the `toda` command: configuration, the four subcommands
//! and their JSON reports. Each command returns the report text and the exit
//! code; the binary only prints and exits.

pub mod commands;
pub mod config;

use std::fmt;

pub use commands::{check, scan, solve, verify, Outcome};
pub use config::{Overrides, RunConfig, ScanConfig, VariantSelector, VerifyThresholds};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_NOT_EXISTS: i32 = 3;
pub const EXIT_DISAGREE: i32 = 4;
pub const EXIT_DIVERGED: i32 = 5;
pub const EXIT_VERIFY_FAILED: i32 = 6;

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn invalid(msg: impl Into<String>) -> Self {
        CliError {
            code: EXIT_INVALID,
            message: msg.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<toda_core::Error> for CliError {
    fn from(e: toda_core::Error) -> Self {
        let code = match e {
            toda_core::Error::Internal(_) => EXIT_ERROR,
            _ => EXIT_INVALID,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}
