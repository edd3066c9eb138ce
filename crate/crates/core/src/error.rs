//! Error type shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Shape disagreement between two objects, naming the offending axis.
    #[error("dimension mismatch on axis {axis}: expected {expected}, got {got}")]
    DimMismatch {
        axis: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParam { name: &'static str, reason: String },

    #[error("eigendecomposition failed for normal-operator block (column {col}, frame {frame})")]
    EigenFailure { col: usize, frame: usize },

    #[error("infeasible mask spec: {0}")]
    InfeasibleMask(String),

    #[error("incompatible algorithm/regularizer pair: {0}")]
    Incompatible(String),

    /// Malformed dataset file; `offset` is the byte position of the problem.
    #[error("bad dataset file at byte {offset}: {reason}")]
    Format { offset: u64, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParam {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn format(offset: u64, reason: impl Into<String>) -> Self {
        Error::Format {
            offset,
            reason: reason.into(),
        }
    }
}
