use thiserror::Error;

/// Errors produced anywhere in the harness.
#[derive(Error, Debug)]
pub enum Error {
    #[error("length mismatch for {field}: expected {expected} bytes, got {actual}")]
    LengthMismatch {
        field: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("authentication failed")]
    AuthFailure,
    #[error("invalid cipher spec: {0}")]
    InvalidSpec(String),
    #[error("unknown cipher `{0}`")]
    UnknownCipher(String),
    #[error("cipher `{0}` is already registered")]
    DuplicateCipher(String),
    #[error("counter overflow: index {index} does not fit in {len} bytes")]
    Overflow { index: u64, len: usize },
    #[error("cannot draw {index} distinct random values of {len} bytes")]
    UniquenessExhausted { index: u64, len: usize },
    #[error("{test}: sequence of {actual} bits is shorter than the required {needed}")]
    SequenceTooShort {
        test: &'static str,
        needed: usize,
        actual: usize,
    },
    #[error("insufficient data: need {needed} bytes, have {available}")]
    InsufficientData { needed: usize, available: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("malformed genome: {0}")]
    MalformedGenome(String),
    #[error("vector set is empty")]
    EmptySet,
    #[error("invalid plan: {0}")]
    PlanInvalid(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
