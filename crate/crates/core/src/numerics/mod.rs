//! Complex matrix primitives and chi-square special functions.

mod chisq;
mod matrix;
mod opcount;

pub use chisq::{chi2_inverse_survival, chi2_survival, ChiSquare};
pub use matrix::{determinant, hermitian_check, log_determinant, symmetric_check, ComplexMatrix};
pub use opcount::{MulCount, MulCounter};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericsError {
    #[error("dimension error: {0}")]
    Dimension(String),
    #[error("expected {expected} entries, got {actual}")]
    Shape { expected: usize, actual: usize },
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("domain error: {0}")]
    Domain(String),
}
