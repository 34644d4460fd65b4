use thiserror::Error;

/// Errors shared across the oracle, the estimator, and the generators.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("precondition violated: {0}")]
    PreconditionViolation(String),

    /// A modelling assumption required by an operator-level construction
    /// failed on the given inputs.
    #[error("assumption violated ({name}): {detail}")]
    AssumptionViolation { name: String, detail: String },

    #[error("matrix not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("generation failed: {0}")]
    GenerationFailure(String),

    /// Two independent routes that must agree by theory disagreed. This is
    /// how a verifier reports a falsified statement.
    #[error("oracle inconsistency in {statement}: {detail}")]
    OracleInconsistency { statement: String, detail: String },

    #[error("parse error at line {line}, column {column}: {detail}")]
    Parse {
        line: usize,
        column: usize,
        detail: String,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
