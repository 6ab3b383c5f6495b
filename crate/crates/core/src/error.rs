use thiserror::Error;

/// Failure modes shared by every module of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("site {site} out of range for {n_qubits} qubits")]
    SiteOutOfRange { site: usize, n_qubits: usize },

    #[error("site listed more than once: {0}")]
    DuplicateSite(String),

    #[error("the space has no bosonic mode")]
    NoBoson,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("operator is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("system size {n} exceeds the cap of {cap}")]
    SizeCap { n: usize, cap: usize },

    #[error("parameter count {got} is below the minimum of {min}")]
    TooFewParameters { got: usize, min: usize },

    #[error("expected {expected} parameters, got {got}")]
    ParameterCount { expected: usize, got: usize },

    #[error("circuit cannot be streamed: {0}")]
    NotStreamable(String),

    #[error("spectral gap {0:e} is below the degeneracy threshold")]
    DegenerateGap(f64),

    #[error("objective returned a non-finite value at {0}")]
    NonFinite(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("iteration did not converge: {0}")]
    NoConvergence(String),

    #[error("linear algebra backend failed: {0}")]
    Linalg(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl From<ndarray_linalg::error::LinalgError> for Error {
    fn from(e: ndarray_linalg::error::LinalgError) -> Self {
        Error::Linalg(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
