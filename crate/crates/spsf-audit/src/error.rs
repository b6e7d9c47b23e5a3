use thiserror::Error;

/// Errors surfaced by the audit library.
#[derive(Debug, Error)]
pub enum AuditError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("group has zero empirical mass")]
    EmptyGroup,

    #[error("insufficient samples: need at least {need}, got {got}")]
    InsufficientSamples { need: usize, got: usize },

    #[error("unknown oracle selector: {0}")]
    UnknownOracle(String),

    #[error("brute-force oracle supports d <= 3 (got d = {0}); use the chow or local oracle")]
    DimensionTooLarge(usize),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("unsupported report version {0}")]
    UnsupportedVersion(u64),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, AuditError>;
