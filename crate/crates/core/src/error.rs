use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, ScaError>;

#[derive(Debug, Error)]
pub enum ScaError {
    /// A caller broke an operation's precondition (shapes, ranges, counts).
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("singular matrix: {0}")]
    Singular(String),

    /// Input that is well-formed but cannot be processed (constant data, zero vectors).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("format error at byte {offset}: {message}")]
    Format { offset: u64, message: String },

    /// Training produced a non-finite loss.
    #[error("non-finite loss at step {step}: recon={recon}, biorth={biorth}, volume={volume}")]
    NonFinite {
        step: usize,
        recon: f64,
        biorth: f64,
        volume: f64,
    },

    #[error("evaluation failed: {0}")]
    Evaluation(String),

    #[error("generator failed: {0}")]
    Generator(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl ScaError {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        ScaError::Contract(msg.into())
    }

    pub(crate) fn format(offset: u64, msg: impl Into<String>) -> Self {
        ScaError::Format {
            offset,
            message: msg.into(),
        }
    }

    /// Process exit code: 2 for numerical failures, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            ScaError::NonFinite { .. } | ScaError::Singular(_) | ScaError::Evaluation(_) => 2,
            _ => 1,
        }
    }
}
