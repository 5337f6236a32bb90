use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of a numerical routine.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("empty sample")]
    EmptySample,

    /// The boundary has no dominant principal axis.
    #[error("degenerate orientation: top two covariance eigenvalues coincide")]
    DegenerateOrientation,

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("objective is not finite at every evaluated bandwidth")]
    NonFiniteObjective,

    #[error("{path}: line {line}: {message}")]
    Schema {
        path: String,
        line: u64,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of the numerical machinery rather than of the input data.
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::Domain(_) | Error::NonFiniteObjective)
    }
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
