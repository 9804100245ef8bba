//! Error type shared by the whole crate.

use thiserror::Error;

/// Errors produced by operator arithmetic, model fitting and file handling.
#[derive(Debug, Error)]
pub enum Error {
    /// A vector or matrix dimension does not match what the operation needs.
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    /// An operator must carry at least one (alpha, beta) pair.
    #[error("operator has no (alpha, beta) pairs")]
    EmptyOperator,

    /// A family must contain at least one operator.
    #[error("family contains no operators")]
    EmptyFamily,

    /// A non-finite value showed up where only finite reals are allowed.
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    /// Refusing to materialise a dense matrix above the configured cap.
    #[error("dense size cap exceeded: {entries} entries > cap {cap}")]
    SizeCapExceeded { entries: usize, cap: usize },

    /// Fewer independent directions are available than were requested.
    #[error("requested {requested} basis vectors but only {attainable} are attainable")]
    RankDeficient { requested: usize, attainable: usize },

    /// An operation needs a complete (square) orthonormal basis.
    #[error("basis is not complete: {cols} columns in ambient dimension {dim}")]
    IncompleteBasis { cols: usize, dim: usize },

    /// Columns fail the orthonormality check.
    #[error("columns are not orthonormal: max deviation {deviation:.3e} exceeds {tolerance:.1e}")]
    NotOrthonormal { deviation: f64, tolerance: f64 },

    /// A parameter is outside its documented domain.
    #[error("invalid parameter {name}: {reason}")]
    InvalidParam { name: &'static str, reason: String },

    /// Underlying I/O failure.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// A container header could not be parsed.
    #[error("malformed header at byte {offset}: {detail}")]
    MalformedHeader { offset: u64, detail: String },

    /// A payload value could not be parsed.
    #[error("malformed payload at byte {offset}: {detail}")]
    MalformedPayload { offset: u64, detail: String },

    /// The file ended in the middle of record `record` of the current container.
    #[error("truncated payload at byte {offset} in record {record}")]
    TruncatedPayload { offset: u64, record: usize },

    /// Header fields contradict each other or the data they describe.
    #[error("dimension inconsistency at byte {offset}: {detail}")]
    DimensionInconsistency { offset: u64, detail: String },
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
