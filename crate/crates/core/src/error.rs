use thiserror::Error;

use crate::stone::StoneElement;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("cover does not reach 1 at point {point}")]
    IncompleteCover { point: usize },

    #[error("net of size {size} exceeds the configured cap {cap}")]
    SizeCap { size: f64, cap: usize },

    #[error("solver did not converge within {iterations} iterations (certified gap {gap:e})")]
    IterationLimit {
        iterations: usize,
        gap: f64,
        best: StoneElement,
    },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("group closure exceeds cap {cap}")]
    CapExceeded { cap: usize },

    #[error("group element {0} is not in the enumerated closure")]
    UnknownElement(usize),

    #[error("invalid extension: {0}")]
    InvalidExtension(String),

    #[error("construction failed: {0}")]
    Construction(String),

    #[error("infeasible at this truncation: {0}")]
    Infeasible(String),

    #[error("schema violation at line {line}, column {column}: {message}")]
    Schema {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("internal model error: {0}")]
    Internal(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
