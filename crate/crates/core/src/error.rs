use thiserror::Error;

/// Errors reported by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("insufficient atoms: need at least {needed}, got {got}")]
    InsufficientAtoms { needed: usize, got: usize },
    #[error("quadrature failed to converge: successive orders differ by {difference:e} (relative)")]
    QuadratureFailure { difference: f64 },
    #[error("eigensolver did not converge after {iterations} iterations (best residual {residual:e})")]
    EigensolverFailure { iterations: usize, residual: f64 },
    #[error("matrix is not positive semidefinite: eigenvalue {eigenvalue:e} below tolerance {threshold:e}")]
    NotPositiveSemidefinite { eigenvalue: f64, threshold: f64 },
    #[error("mode index out of range: {0}")]
    ModeOutOfRange(String),
    #[error("invalid data: {0}")]
    InvalidData(String),
    #[error("unsupported kernel: {0}")]
    UnsupportedKernel(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("archive error: {0}")]
    Archive(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for failures of the numerical methods themselves, as opposed to
    /// bad input or I/O.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::QuadratureFailure { .. }
                | Error::EigensolverFailure { .. }
                | Error::NotPositiveSemidefinite { .. }
        )
    }
}
