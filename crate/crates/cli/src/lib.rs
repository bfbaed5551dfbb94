//! `tempora` command-line front end: data preparation, training, forecasting,
//! evaluation and the correctness self-check.

pub mod args;
pub mod commands;
pub mod manifest;

use tempora::ErrorClass;
use thiserror::Error;

/// Seed of the pinned synthetic station.
pub const REFERENCE_DATA_SEED: u64 = 2003;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] tempora::Error),

    #[error("{0}")]
    Usage(String),

    #[error("self-check failed:\n{0}")]
    Oracle(String),

    #[error("replay differs from the manifest: {0}")]
    Replay(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// 0 success, 2 validation, 3 data, 4 divergence, 5 oracle failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) => match e.class() {
                ErrorClass::Validation => 2,
                ErrorClass::Data => 3,
                ErrorClass::Divergence => 4,
                ErrorClass::Internal => 1,
            },
            CliError::Usage(_) => 2,
            CliError::Oracle(_) => 5,
            CliError::Replay(_) => 1,
            CliError::Io(_) => 3,
        }
    }
}
