use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("site {site} is outside 1..={nsites}")]
    SiteOutOfRange { site: usize, nsites: usize },

    #[error("site {0} appears more than once")]
    DuplicateSite(usize),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not Hermitian (max |m - m^dagger| = {residual:e})")]
    NotHermitian { residual: f64 },

    #[error("partial trace needs at least one site to keep")]
    EmptyKeepSet,

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("series is empty")]
    EmptySeries,

    #[error("positivity violated at t = {time}: minimum eigenvalue {min_eigenvalue:e}")]
    PositivityViolation { time: f64, min_eigenvalue: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("numerical failure at {point}: {source}")]
    AtPoint {
        point: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
