use thiserror::Error;

/// Errors produced by the analysis library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("matrix is not Hermitian (|a_ij - conj(a_ji)| = {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("matrix diagonal entry {index} is {value}, expected 1")]
    NotUnitDiagonal { index: usize, value: f64 },

    #[error("matrix is not positive definite (smallest eigenvalue {smallest:e})")]
    NotPositiveDefinite { smallest: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("eigenvalues are not pairwise distinct (gap {gap:e})")]
    RepeatedEigenvalues { gap: f64 },

    #[error("quadrature did not converge: estimate {estimate:e}, error bound {error:e}")]
    Quadrature { estimate: f64, error: f64 },

    #[error("outage probability underflowed to zero at {rho_db} dB")]
    OutageUnderflow { rho_db: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("configuration error in `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
