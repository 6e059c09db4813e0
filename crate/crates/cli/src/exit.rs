//! Error type carrying the process exit code.
//!
//! Codes: 0 success, 2 configuration error, 3 I/O error, 4 validation
//! failure.

use std::fmt;

pub const CODE_CONFIG: i32 = 2;
pub const CODE_IO: i32 = 3;
pub const CODE_VALIDATION: i32 = 4;

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub error: anyhow::Error,
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.error)
    }
}

pub type CliResult<T = ()> = Result<T, CliError>;

pub fn config_error(error: impl Into<anyhow::Error>) -> CliError {
    CliError {
        code: CODE_CONFIG,
        error: error.into(),
    }
}

pub fn io_error(error: impl Into<anyhow::Error>) -> CliError {
    CliError {
        code: CODE_IO,
        error: error.into(),
    }
}

pub fn validation_error(error: impl Into<anyhow::Error>) -> CliError {
    CliError {
        code: CODE_VALIDATION,
        error: error.into(),
    }
}

/// Attaches exit codes to plain results.
pub trait IntoCliResult<T> {
    fn or_config(self) -> CliResult<T>;
    fn or_io(self) -> CliResult<T>;
    fn or_validation(self) -> CliResult<T>;
}

impl<T, E: Into<anyhow::Error>> IntoCliResult<T> for Result<T, E> {
    fn or_config(self) -> CliResult<T> {
        self.map_err(config_error)
    }

    fn or_io(self) -> CliResult<T> {
        self.map_err(io_error)
    }

    fn or_validation(self) -> CliResult<T> {
        self.map_err(validation_error)
    }
}
