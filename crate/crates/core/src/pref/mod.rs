//! Gaussian-process preference model.

pub mod dataset;
pub mod fit;
pub mod likelihood;
pub mod model;

pub use dataset::{Dataset, PreferenceRecord};
pub use fit::{map_fit, map_objective, FitConfig, HyperPrior};
pub use likelihood::btl_log_likelihood;
pub use model::{BestMode, FittedModel, Posterior};
