pub mod acquisition;
pub mod error;
pub mod grid;
pub mod kernel;
pub mod optim;
pub mod pref;
pub mod space;
pub mod subspace;

pub use acquisition::{expected_improvement, maximize_ei, plane_acquisition, AcquisitionConfig, GradientMode};
pub use error::{Error, Result};
pub use grid::{
    reachable_set_size, simulate_line_session, simulate_plane_continuous, simulate_plane_session, Cell, GridSpec,
    LineSession, PlaneSession, PreferenceIntent,
};
pub use kernel::{kernel, KernelHyperparams};
pub use pref::{
    btl_log_likelihood, map_fit, map_objective, BestMode, Dataset, FitConfig, FittedModel, HyperPrior,
    Posterior, PreferenceRecord,
};
pub use space::{ParamVector, SearchSpace};
pub use subspace::{
    clip_negative_vertices, construct_line, construct_plane, initial_plane, random_plane, BoundaryMode, Line,
    Plane, PlaneConfig, PlaneLocalCoord,
};
