use thiserror::Error;

use crate::ncpoly::ParseError;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error("deformation parameter q = {q} outside the admissible range ({range})")]
    QOutOfRange { q: f64, range: &'static str },

    #[error("generator index {index} outside 1..={dim}")]
    GeneratorIndex { index: usize, dim: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("polynomial is not self-adjoint; asymmetric terms: {0}")]
    NotSelfAdjoint(String),

    #[error("truncation level {level} is below the polynomial degree {degree}")]
    LevelBelowDegree { level: usize, degree: usize },

    #[error("resource budget exceeded: {0}")]
    Budget(#[from] crate::bounds::BudgetReport),

    #[error("Gram block for letter type {0:?} is not positive definite")]
    GramNotPositive(Vec<u16>),
}

/// Rejects `q` unless `|q| < 1`.
pub(crate) fn check_open_q(q: f64) -> Result<()> {
    if q.is_finite() && q.abs() < 1.0 {
        Ok(())
    } else {
        Err(Error::QOutOfRange {
            q,
            range: "-1 < q < 1",
        })
    }
}

/// Rejects `q` unless `|q| <= 1`.
pub(crate) fn check_closed_q(q: f64) -> Result<()> {
    if q.is_finite() && q.abs() <= 1.0 {
        Ok(())
    } else {
        Err(Error::QOutOfRange {
            q,
            range: "-1 <= q <= 1",
        })
    }
}
