use seqplane_core::Error as CoreError;
use thiserror::Error;

pub type Result<T, E = GalleryError> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GalleryError {
    #[error("{0} not found")]
    NotFound(String),

    #[error("cell ({i}, {j}) lies outside the design space")]
    RejectedChoice { i: i32, j: i32 },

    #[error("{0}")]
    Malformed(String),

    #[error("{0}")]
    InvalidState(String),

    #[error("image too large: {0}")]
    TooLarge(String),

    /// Model refit or plane construction failed; the session was rolled back.
    #[error("model update failed: {0}")]
    ModelUpdate(String),
}

impl GalleryError {
    /// Stable machine-readable code for API clients.
    pub fn code(&self) -> &'static str {
        match self {
            GalleryError::NotFound(_) => "not_found",
            GalleryError::RejectedChoice { .. } => "rejected_choice",
            GalleryError::Malformed(_) => "malformed",
            GalleryError::InvalidState(_) => "invalid_state",
            GalleryError::TooLarge(_) => "too_large",
            GalleryError::ModelUpdate(_) => "model_update_failed",
        }
    }
}

impl From<CoreError> for GalleryError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::RejectedChoice { i, j } => GalleryError::RejectedChoice { i, j },
            CoreError::InvalidState(m) => GalleryError::InvalidState(m),
            CoreError::FitFailure { .. } | CoreError::ConstructionFailure(_) => GalleryError::ModelUpdate(e.to_string()),
            other => GalleryError::Malformed(other.to_string()),
        }
    }
}
