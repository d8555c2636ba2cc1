use thiserror::Error;

use crate::domain::ValidationReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid instance: {0}")]
    InvalidInstance(ValidationReport),

    #[error("invalid rational literal {0:?}")]
    ParseRational(String),

    /// An enumeration would exceed its configured ceiling.
    #[error("budget refused for {what}: bound {bound} exceeds limit {limit}")]
    Budget {
        what: &'static str,
        bound: String,
        limit: String,
    },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("groups do not cover the domain; uncovered points {0:?}")]
    NotCovering(Vec<usize>),

    #[error("linear program ended {0}")]
    Lp(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }
}
