use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SconeError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid support: {0}")]
    InvalidSupport(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("support mismatch: {0}")]
    SupportMismatch(String),
    #[error("geometry: {0}")]
    Geometry(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("not applicable: {0}")]
    NotApplicable(String),
    #[error("solver: {0}")]
    Solver(String),
}

pub type Result<T> = std::result::Result<T, SconeError>;
