//! Interactive photo enhancement by sequential plane search: the headless
//! session logic, the enhancement definition and the HTTP service.

pub mod api;
pub mod enhance;
pub mod error;
pub mod golden;
pub mod images;
pub mod session;

pub use api::{router, AppState};
pub use enhance::{apply_enhancement, render, EnhanceParams};
pub use error::{GalleryError, Result};
pub use session::{GallerySession, GridPayload, SessionSnapshot};
