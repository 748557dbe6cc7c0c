//! One user's interactive run: zoomable-grid choices feed the preference
//! model, and each completed plane yields the next one.

use std::time::{SystemTime, UNIX_EPOCH};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use seqplane_core::{
    construct_plane, initial_plane, map_fit, BestMode, Dataset, FitConfig, FittedModel, GridSpec, KernelHyperparams,
    PlaneConfig, PlaneLocalCoord, PlaneSession, SearchSpace,
};
use serde::{Deserialize, Serialize};

use crate::enhance::{EnhanceParams, PARAM_COUNT};
use crate::error::{GalleryError, Result};

fn now_ms() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis() as u64).unwrap_or(0)
}

/// Plane construction for the session's `iteration` draws from its own
/// stream, so no generator state has to be persisted.
fn plane_rng(seed: u64, iteration: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(iteration as u64);
    rng
}

/// Interactive sessions take `x⁺` to be the most recent choice.
pub fn plane_config() -> PlaneConfig {
    PlaneConfig { best_mode: BestMode::LastChosen, ..PlaneConfig::default() }
}

pub fn fit_config() -> FitConfig {
    FitConfig::default()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SatisfiedEntry {
    pub iteration: usize,
    pub timestamp_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChoiceEvent {
    pub iteration: usize,
    pub level: usize,
    pub i: i32,
    pub j: i32,
    pub timestamp_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellPayload {
    pub i: i32,
    pub j: i32,
    pub coord: PlaneLocalCoord,
    /// Parameters of this cell. Out-of-range values only occur on invalid cells.
    pub params: EnhanceParams,
    pub valid: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPayload {
    pub session_id: String,
    pub level: usize,
    pub levels: usize,
    pub resolution: usize,
    pub iteration: usize,
    pub best: EnhanceParams,
    pub cells: Vec<CellPayload>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChoiceOutcome {
    pub completed_plane: bool,
}

#[derive(Debug, Clone)]
pub struct GallerySession {
    id: String,
    image_ref: String,
    seed: u64,
    dataset: Dataset,
    model: Option<FittedModel>,
    plane_session: PlaneSession,
    iteration: usize,
    satisfied_at: Vec<SatisfiedEntry>,
    event_log: Vec<ChoiceEvent>,
}

fn params_unchecked(x: &[f64]) -> EnhanceParams {
    let mut balance = [[0.0; 3]; 3];
    for (k, b) in x[3..].iter().enumerate() {
        balance[k / 3][k % 3] = *b;
    }
    EnhanceParams { brightness: x[0], contrast: x[1], saturation: x[2], balance }
}

impl GallerySession {
    pub fn new(id: String, image_ref: String, grid: GridSpec, seed: u64) -> Result<Self> {
        let space = SearchSpace::new(PARAM_COUNT)?;
        let plane = initial_plane(&space, &mut plane_rng(seed, 0), 0.5)?;
        Ok(Self {
            id,
            image_ref,
            seed,
            dataset: Dataset::new(space),
            model: None,
            plane_session: PlaneSession::new(plane, grid)?,
            iteration: 0,
            satisfied_at: Vec::new(),
            event_log: Vec::new(),
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub(crate) fn set_id(&mut self, id: String) {
        self.id = id;
    }

    pub fn image_ref(&self) -> &str {
        &self.image_ref
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn dataset(&self) -> &Dataset {
        &self.dataset
    }

    pub fn model(&self) -> Option<&FittedModel> {
        self.model.as_ref()
    }

    pub fn plane_session(&self) -> &PlaneSession {
        &self.plane_session
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn satisfied_at(&self) -> &[SatisfiedEntry] {
        &self.satisfied_at
    }

    pub fn event_log(&self) -> &[ChoiceEvent] {
        &self.event_log
    }

    pub fn grid(&self) -> Result<GridPayload> {
        let spec = self.plane_session.spec();
        let cells = self
            .plane_session
            .grid_cells()?
            .into_iter()
            .map(|c| CellPayload { i: c.i, j: c.j, coord: c.coord, params: params_unchecked(&c.point), valid: c.valid })
            .collect();
        Ok(GridPayload {
            session_id: self.id.clone(),
            level: self.plane_session.level(),
            levels: spec.levels,
            resolution: spec.resolution,
            iteration: self.iteration,
            best: self.best(),
            cells,
        })
    }

    /// Clicks a cell. Completing a plane records the preference, refits the
    /// model and builds the next plane; if that fails the session is left
    /// exactly as it was before the click.
    pub fn choose(&mut self, i: i32, j: i32) -> Result<ChoiceOutcome> {
        let mut plane_session = self.plane_session.clone();
        let level = plane_session.level();
        plane_session.choose(i, j)?;
        let event = ChoiceEvent { iteration: self.iteration, level, i, j, timestamp_ms: now_ms() };
        if !plane_session.completed() {
            self.plane_session = plane_session;
            self.event_log.push(event);
            return Ok(ChoiceOutcome { completed_plane: false });
        }

        let intent = plane_session.finalize_preference()?;
        let mut dataset = self.dataset.clone();
        dataset.add_preference(&intent.winner, &intent.losers)?;
        let model = map_fit(&dataset, &fit_config())?;
        let next = self.iteration + 1;
        let plane = construct_plane(&model, &plane_config(), &mut plane_rng(self.seed, next))?;
        let fresh = PlaneSession::new(plane, *self.plane_session.spec())?;

        self.dataset = dataset;
        self.model = Some(model);
        self.plane_session = fresh;
        self.iteration = next;
        self.event_log.push(event);
        Ok(ChoiceOutcome { completed_plane: true })
    }

    /// Logs a "satisfied" press; returns the number of presses so far.
    pub fn satisfied(&mut self) -> usize {
        self.satisfied_at.push(SatisfiedEntry { iteration: self.iteration, timestamp_ms: now_ms() });
        self.satisfied_at.len()
    }

    /// The most recently chosen parameters, or neutral before any choice.
    pub fn best(&self) -> EnhanceParams {
        match self.dataset.records().last() {
            Some(r) => params_unchecked(&self.dataset.points()[r.winner()]),
            None => EnhanceParams::NEUTRAL,
        }
    }

    pub fn snapshot(&self) -> SessionSnapshot {
        SessionSnapshot {
            id: self.id.clone(),
            image_ref: self.image_ref.clone(),
            seed: self.seed,
            iteration: self.iteration,
            dataset: self.dataset.clone(),
            model: self.model.as_ref().map(|m| ModelState {
                hyperparams: m.hyperparams().clone(),
                latent_goodness: m.latent_goodness().to_vec(),
            }),
            plane_session: self.plane_session.clone(),
            satisfied_at: self.satisfied_at.clone(),
            event_log: self.event_log.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.snapshot()).expect("snapshot serialization is infallible")
    }

    pub fn restore(snapshot: SessionSnapshot) -> Result<Self> {
        let s = snapshot;
        let n = s.dataset.space().dim();
        if n != PARAM_COUNT || s.plane_session.plane().dim() != PARAM_COUNT {
            return Err(GalleryError::Malformed(format!("snapshot is not a {PARAM_COUNT}-parameter session")));
        }
        let model = match s.model {
            Some(m) => {
                let fit = fit_config();
                let h = KernelHyperparams::new(m.hyperparams.amplitude, m.hyperparams.length_scales)?;
                Some(FittedModel::new(s.dataset.clone(), h, m.latent_goodness, fit.btl_scale, fit.jitter_factor)?)
            }
            None if s.dataset.records().is_empty() => None,
            None => return Err(GalleryError::Malformed("snapshot has preference records but no model".into())),
        };
        Ok(Self {
            id: s.id,
            image_ref: s.image_ref,
            seed: s.seed,
            dataset: s.dataset,
            model,
            plane_session: s.plane_session,
            iteration: s.iteration,
            satisfied_at: s.satisfied_at,
            event_log: s.event_log,
        })
    }

    /// Parse errors report their line and column.
    pub fn from_json(text: &str) -> Result<Self> {
        let snapshot: SessionSnapshot =
            serde_json::from_str(text).map_err(|e| GalleryError::Malformed(format!("snapshot JSON: {e}")))?;
        Self::restore(snapshot)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelState {
    pub hyperparams: KernelHyperparams,
    pub latent_goodness: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSnapshot {
    pub id: String,
    pub image_ref: String,
    pub seed: u64,
    pub iteration: usize,
    pub dataset: Dataset,
    pub model: Option<ModelState>,
    pub plane_session: PlaneSession,
    pub satisfied_at: Vec<SatisfiedEntry>,
    pub event_log: Vec<ChoiceEvent>,
}
