use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension {n} is below the supported minimum {min}")]
    DimensionTooSmall { n: usize, min: usize },

    #[error("dimension {n} exceeds the dense storage limit {max}")]
    DimensionTooLarge { n: usize, max: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("expected {expected} entries, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("non-finite value in input")]
    NonFinite,

    #[error("curvature symmetry violated by {defect:e} ({which})")]
    SymmetryViolation { which: &'static str, defect: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("input must be sorted ascending")]
    Unsorted,

    #[error("instance is not in reduced form x_3 = ... = x_n")]
    NotReduced,

    #[error("instance violates constraint(s) {0}")]
    Infeasible(String),

    #[error("index {index} not allowed: {reason}")]
    BadIndex { index: usize, reason: &'static str },

    #[error("point does not belong to a {kind} model of dimension {n}")]
    PointMismatch { kind: &'static str, n: usize },
}
