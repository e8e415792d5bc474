use thiserror::Error;

/// Errors raised anywhere in the library.
///
/// Messages name the offending input so that CLI diagnostics can be
/// surfaced verbatim.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("index {index} out of range for {n_qubits} qubits")]
    QubitOutOfRange { index: usize, n_qubits: usize },

    #[error("degenerate data: {0}")]
    Degenerate(String),

    #[error("{0} did not converge after {1} iterations")]
    NonConvergence(&'static str, usize),

    #[error("numerical breakdown: {0}")]
    Numerical(String),

    #[error("row {row}, column `{column}`: {message}")]
    Record {
        row: usize,
        column: String,
        message: String,
    },

    #[error("schema: {0}")]
    Schema(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
