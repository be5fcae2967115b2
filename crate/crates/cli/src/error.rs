//! Error classes and their exit codes. The mapping is part of the CLI
//! contract: scripts branch on these numbers.
//!
//! 0 success, 1 unexpected, 2 configuration (parse/validation, including
//! malformed input artifacts), 3 I/O, 4 model or numerical failure,
//! 5 requested operating point unreachable (out-of-band / infeasible
//! bounds).

use std::fmt;

#[derive(Debug)]
pub enum CliError {
    /// Bad config file, bad input artifact, or missing required block.
    Config(String),
    /// Filesystem failure with the path it happened on.
    Io {
        path: String,
        source: std::io::Error,
    },
    /// The model rejected the run (validation, singularity, fit failure).
    Model(magopt::Error),
    /// Anything that fits no other class.
    Other(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io { .. } => 3,
            CliError::Model(e) => match e {
                magopt::Error::OutOfBand { .. } | magopt::Error::InfeasibleBounds(_) => 5,
                _ => 4,
            },
            CliError::Other(_) => 1,
        }
    }

    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "config error: {msg}"),
            CliError::Io { path, source } => write!(f, "i/o error on {path}: {source}"),
            CliError::Model(e) => write!(f, "model error: {e}"),
            CliError::Other(msg) => write!(f, "error: {msg}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<magopt::Error> for CliError {
    fn from(e: magopt::Error) -> Self {
        CliError::Model(e)
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
