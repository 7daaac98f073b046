use std::path::PathBuf;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error(
        "truncation rank {rank} unusable: eigenvalue {eigenvalue:e} below tolerance {tolerance:e}"
    )]
    TruncationRank {
        rank: usize,
        eigenvalue: f64,
        tolerance: f64,
    },

    #[error("spectral gap vanishes at index {index}: eigenvalues {lambda:e} and {next:e} tie")]
    SpectralGap { index: usize, lambda: f64, next: f64 },

    #[error("certificate invalid: epsilon {epsilon:e} must lie in (0, delta_r) with delta_r {delta_r:e}")]
    CertificateInvalid { epsilon: f64, delta_r: f64 },

    #[error("trajectory diverged at step {step}")]
    Divergence { step: usize },

    #[error("quadrature failed to converge: achieved {achieved:e}, requested {requested:e}")]
    QuadratureNonConvergence { achieved: f64, requested: f64 },

    #[error("linear algebra failure: {0}")]
    Linalg(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error in {path}: {message}")]
    Parse { path: PathBuf, message: String },
}

impl From<ndarray_linalg::error::LinalgError> for Error {
    fn from(e: ndarray_linalg::error::LinalgError) -> Self {
        Error::Linalg(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
