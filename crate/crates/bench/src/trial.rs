//! One simulated user working through a sequence of subspace queries.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use seqplane_core::{
    construct_line, construct_plane, initial_plane, map_fit, random_plane, simulate_line_session,
    simulate_plane_continuous, simulate_plane_session, Dataset, FitConfig, GridSpec, Line, ParamVector, Plane,
    PlaneConfig, PreferenceIntent, Result, SearchSpace,
};
use serde::{Deserialize, Serialize};

use crate::functions::SyntheticFunction;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Sequential line search (baseline).
    Sls,
    /// Plane search with a random plane through `x⁺`.
    SpsRandom,
    /// Plane search with the acquisition-driven plane.
    SpsBo,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Sls, Method::SpsRandom, Method::SpsBo];

    pub fn name(self) -> &'static str {
        match self {
            Method::Sls => "sls",
            Method::SpsRandom => "sps_random",
            Method::SpsBo => "sps_bo",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// How a simulated user answers a plane query.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Simulation {
    /// Greedy clicks through the zoomable grid.
    #[default]
    Grid,
    /// Best point of a dense `side × side` lattice over the plane.
    Continuous { side: usize },
}

#[derive(Debug, Clone)]
pub struct TrialConfig {
    pub method: Method,
    pub function: SyntheticFunction,
    pub iterations: usize,
    pub seed: u64,
    pub grid: GridSpec,
    /// Acquisition settings, `x⁺` mode and plane construction knobs.
    pub plane: PlaneConfig,
    pub fit: FitConfig,
    pub simulation: Simulation,
    pub line_samples: usize,
    pub initial_half_extent: f64,
}

impl TrialConfig {
    pub fn new(method: Method, function: SyntheticFunction, iterations: usize, seed: u64) -> Self {
        Self {
            method,
            function,
            iterations,
            seed,
            grid: GridSpec::default(),
            plane: PlaneConfig::default(),
            fit: FitConfig::default(),
            simulation: Simulation::Grid,
            line_samples: 1000,
            initial_half_extent: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialRow {
    pub iteration: usize,
    pub best_value: f64,
    pub optimality_gap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialFailure {
    pub iteration: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub method: Method,
    pub function: SyntheticFunction,
    pub seed: u64,
    /// One row per completed iteration.
    pub rows: Vec<TrialRow>,
    pub failure: Option<TrialFailure>,
}

/// The query shown to the simulated user at one iteration.
#[derive(Debug, Clone, PartialEq)]
pub enum Subspace {
    Plane(Plane),
    Line(Line),
}

/// Independent generator streams so that e.g. the initial subspace does not
/// shift the randomness used by later constructions.
fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

pub fn run_trial(config: &TrialConfig) -> TrialResult {
    run_trial_observed(config, |_, _| {})
}

/// Runs a trial, calling `observe(iteration, subspace)` before each query.
pub fn run_trial_observed<F>(config: &TrialConfig, mut observe: F) -> TrialResult
where
    F: FnMut(usize, &Subspace),
{
    let mut rows = Vec::with_capacity(config.iterations);
    let failure = trial_loop(config, &mut rows, &mut observe).err().map(|e| TrialFailure {
        iteration: rows.len() + 1,
        message: format!(
            "{} on {} (n={}, seed {}) at iteration {}: {e}",
            config.method,
            config.function.kind(),
            config.function.dim(),
            config.seed,
            rows.len() + 1
        ),
    });
    TrialResult { method: config.method, function: config.function.clone(), seed: config.seed, rows, failure }
}

fn trial_loop<F>(config: &TrialConfig, rows: &mut Vec<TrialRow>, observe: &mut F) -> Result<()>
where
    F: FnMut(usize, &Subspace),
{
    let f = &config.function;
    let oracle = |x: &[f64]| f.eval(x);
    let space = SearchSpace::new(f.dim())?;
    let mut init_rng = stream(config.seed, 0);
    let mut rng = stream(config.seed, 1);

    let mut subspace = match config.method {
        Method::Sls => {
            let end = (0..space.dim()).map(|_| init_rng.random::<f64>()).collect();
            Subspace::Line(Line { start: space.center(), end: ParamVector::new(end)? })
        }
        Method::SpsRandom | Method::SpsBo => {
            Subspace::Plane(initial_plane(&space, &mut init_rng, config.initial_half_extent)?)
        }
    };
    let mut data = Dataset::new(space);
    let mut best = f64::NEG_INFINITY;

    for iteration in 1..=config.iterations {
        observe(iteration, &subspace);
        let (_, intent): (ParamVector, PreferenceIntent) = match &subspace {
            Subspace::Line(line) => simulate_line_session(line, config.line_samples, oracle)?,
            Subspace::Plane(plane) => match config.simulation {
                Simulation::Grid => simulate_plane_session(plane, &config.grid, oracle)?,
                Simulation::Continuous { side } => simulate_plane_continuous(plane, side, oracle)?,
            },
        };
        data.add_preference(&intent.winner, &intent.losers)?;
        for x in std::iter::once(&intent.winner).chain(&intent.losers) {
            best = best.max(f.eval(x));
        }
        rows.push(TrialRow { iteration, best_value: best, optimality_gap: f.optimum_value() - best });
        if iteration == config.iterations {
            break;
        }

        let model = map_fit(&data, &config.fit)?;
        let plane_cfg = &config.plane;
        subspace = match config.method {
            Method::Sls => Subspace::Line(construct_line(&model, &plane_cfg.acquisition, plane_cfg.best_mode, &mut rng)?),
            Method::SpsBo => Subspace::Plane(construct_plane(&model, plane_cfg, &mut rng)?),
            Method::SpsRandom => {
                let x_plus = &data.points()[model.current_best(plane_cfg.best_mode)?];
                Subspace::Plane(random_plane(x_plus, plane_cfg.boundary_mode, &mut rng)?)
            }
        };
    }
    Ok(())
}
