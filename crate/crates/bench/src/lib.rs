//! Simulated-user benchmark comparing sequential line search with sequential
//! plane search (random and acquisition-driven planes).

pub mod experiment;
pub mod functions;
pub mod stats;
pub mod trial;

pub use experiment::{compare, read_csv, run_experiment, write_csv, Comparison, ExperimentConfig, Row};
pub use functions::{isotropic_gaussian, neg_scaled_rosenbrock, FunctionKind, SyntheticFunction};
pub use stats::{bonferroni_alpha, mann_whitney_u, MannWhitney};
pub use trial::{run_trial, run_trial_observed, Method, Simulation, Subspace, TrialConfig, TrialResult, TrialRow};
