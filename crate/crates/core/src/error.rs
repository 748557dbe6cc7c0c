use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid state: {0}")]
    InvalidState(String),

    /// MAP estimation produced a non-finite objective. `last_iterate` holds the
    /// last finite (latent goodness, log hyperparameter) vector.
    #[error("fit failed: {reason}")]
    FitFailure { reason: String, last_iterate: Vec<f64> },

    #[error("subspace construction failed: {0}")]
    ConstructionFailure(String),

    #[error("cell ({i}, {j}) lies outside the design space")]
    RejectedChoice { i: i32, j: i32 },

    #[error("simulation failed: {0}")]
    Simulation(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn state(msg: impl Into<String>) -> Self {
        Error::InvalidState(msg.into())
    }
}
