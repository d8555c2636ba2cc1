//! Library half of the `mcal-audit` binary: audit reports and the acceptance suite.

pub mod audit;
pub mod verify;

use mcal_core::Error;
use thiserror::Error as ThisError;

/// Process exit codes.
pub mod exit {
    pub const PASS: u8 = 0;
    pub const ACCEPTANCE_FAILURE: u8 = 1;
    pub const INPUT_ERROR: u8 = 2;
    pub const BUDGET_REFUSAL: u8 = 3;
}

#[derive(Debug, ThisError)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] Error),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(Error::Budget { .. }) => exit::BUDGET_REFUSAL,
            _ => exit::INPUT_ERROR,
        }
    }
}
