use thiserror::Error;

/// Errors raised by the observer library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("matrix is not in the Lie algebra (Frobenius distance {distance:e})")]
    OffAlgebra { distance: f64 },

    #[error("rotation angle {angle} is within the branch-cut margin of pi")]
    BranchAmbiguity { angle: f64 },

    #[error("degenerate landmarks: {0}")]
    DegenerateLandmarks(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("improper transfer function: numerator degree {num} exceeds denominator degree {den}")]
    Improper { num: usize, den: usize },

    #[error("filter design failed: {0}")]
    Design(String),

    #[error("integration left the group at t = {t} s (orthogonality defect {defect:e}); reduce dt")]
    Integration { t: f64, defect: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
