use thiserror::Error;

/// Errors raised by the kernel, linear-algebra, regression and sampling routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("point {value} lies outside the kernel domain [0, {horizon}]")]
    OutOfDomain { value: f64, horizon: f64 },

    #[error("matrix is singular: smallest pivot {smallest_pivot:e} after jitter {jitter:e}")]
    Singular { smallest_pivot: f64, jitter: f64 },

    #[error(
        "kernel sections at the training points are linearly dependent \
         (smallest pivot {smallest_pivot:e}); duplicate or nearly coincident points?"
    )]
    LinearlyDependent { smallest_pivot: f64 },

    #[error("matrix is not positive semidefinite: eigenvalue {eigenvalue:e}")]
    NotPsd { eigenvalue: f64 },

    #[error("eigen-solver did not converge within {sweeps} sweeps")]
    NoConvergence { sweeps: usize },

    #[error("serialization: {0}")]
    Serialization(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_finite(values: &[f64], what: &'static str) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}
