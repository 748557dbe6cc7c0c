//! Zoomable grid over a plane.
//!
//! Level `ℓ` shows a `resolution × resolution` lattice with spacing
//! `h_ℓ = h_0 / zoom^ℓ`, `h_0 = 2 / (resolution − 1)`, centered on the cell
//! clicked at the previous level. Cell coordinates are always recomputed from
//! the stored center, so no error accumulates across levels.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pref::dataset::DEFAULT_DEDUP_TOLERANCE;
use crate::space::{max_dist, ParamVector};
use crate::subspace::{Line, Plane, PlaneLocalCoord};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridSpec {
    pub resolution: usize,
    pub levels: usize,
    pub zoom_factor: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { resolution: 5, levels: 4, zoom_factor: 2.0 }
    }
}

impl GridSpec {
    pub fn new(resolution: usize, levels: usize, zoom_factor: f64) -> Result<Self> {
        let spec = Self { resolution, levels, zoom_factor };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.resolution < 3 || self.resolution % 2 == 0 {
            return Err(Error::invalid(format!("grid resolution must be odd and >= 3, got {}", self.resolution)));
        }
        if self.levels == 0 {
            return Err(Error::invalid("grid needs at least one level"));
        }
        if !(self.zoom_factor.is_finite() && self.zoom_factor > 1.0) {
            return Err(Error::invalid(format!("zoom factor must exceed 1, got {}", self.zoom_factor)));
        }
        Ok(())
    }

    /// Largest cell offset `r = (resolution − 1) / 2`.
    pub fn radius(&self) -> i32 {
        ((self.resolution - 1) / 2) as i32
    }

    pub fn spacing(&self, level: usize) -> f64 {
        let h0 = 2.0 / (self.resolution - 1) as f64;
        h0 / self.zoom_factor.powi(level as i32)
    }

    /// Offsets `(i, j)` in row-major order, `i` outer.
    pub fn offsets(&self) -> impl Iterator<Item = (i32, i32)> {
        let r = self.radius();
        (-r..=r).flat_map(move |i| (-r..=r).map(move |j| (i, j)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub i: i32,
    pub j: i32,
    pub coord: PlaneLocalCoord,
    pub point: ParamVector,
    pub valid: bool,
}

/// A winner and the points it beat, before they are indexed into a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreferenceIntent {
    pub winner: ParamVector,
    pub losers: Vec<ParamVector>,
}

impl PreferenceIntent {
    /// Drops losers equal to the winner or to an earlier loser.
    fn new(winner: ParamVector, candidates: impl IntoIterator<Item = ParamVector>) -> Self {
        let mut losers: Vec<ParamVector> = Vec::new();
        for x in candidates {
            let dup = max_dist(&x, &winner) < DEFAULT_DEDUP_TOLERANCE
                || losers.iter().any(|l| max_dist(l, &x) < DEFAULT_DEDUP_TOLERANCE);
            if !dup {
                losers.push(x);
            }
        }
        Self { winner, losers }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Choice {
    pub level: usize,
    pub i: i32,
    pub j: i32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlaneSession {
    plane: Plane,
    spec: GridSpec,
    level: usize,
    grid_center: PlaneLocalCoord,
    choices: Vec<Choice>,
    chosen_point: Option<ParamVector>,
}

fn in_unit_box(x: &[f64]) -> bool {
    x.iter().all(|v| (0.0..=1.0).contains(v))
}

impl PlaneSession {
    pub fn new(plane: Plane, spec: GridSpec) -> Result<Self> {
        spec.validate()?;
        Ok(Self {
            plane,
            spec,
            level: 0,
            grid_center: PlaneLocalCoord::CENTER,
            choices: Vec::new(),
            chosen_point: None,
        })
    }

    pub fn plane(&self) -> &Plane {
        &self.plane
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn grid_center(&self) -> PlaneLocalCoord {
        self.grid_center
    }

    pub fn choices(&self) -> &[Choice] {
        &self.choices
    }

    pub fn completed(&self) -> bool {
        self.level == self.spec.levels
    }

    pub fn chosen_point(&self) -> Option<&ParamVector> {
        self.chosen_point.as_ref()
    }

    pub fn spacing(&self) -> f64 {
        self.spec.spacing(self.level)
    }

    fn cell(&self, i: i32, j: i32, h: f64) -> Cell {
        let coord = PlaneLocalCoord::new(self.grid_center.s + i as f64 * h, self.grid_center.t + j as f64 * h);
        let point = self.plane.point(coord);
        let valid = in_unit_box(&point);
        Cell { i, j, coord, point, valid }
    }

    /// The current level's cells in row-major order.
    pub fn grid_cells(&self) -> Result<Vec<Cell>> {
        if self.completed() {
            return Err(Error::state("plane session is already completed"));
        }
        let h = self.spacing();
        Ok(self.spec.offsets().map(|(i, j)| self.cell(i, j, h)).collect())
    }

    /// Clicks cell `(i, j)` and zooms in on it. The session is unchanged on error.
    pub fn choose(&mut self, i: i32, j: i32) -> Result<()> {
        if self.completed() {
            return Err(Error::state("plane session is already completed"));
        }
        let r = self.spec.radius();
        if i.abs() > r || j.abs() > r {
            return Err(Error::invalid(format!("cell ({i}, {j}) outside the {0}x{0} grid", self.spec.resolution)));
        }
        let cell = self.cell(i, j, self.spacing());
        if !cell.valid {
            return Err(Error::RejectedChoice { i, j });
        }
        self.choices.push(Choice { level: self.level, i, j });
        self.grid_center = cell.coord;
        self.level += 1;
        if self.completed() {
            self.chosen_point = Some(cell.point);
        }
        Ok(())
    }

    /// The chosen point beats the plane's five representatives. Duplicates of
    /// the winner and representatives outside the box are left out.
    pub fn finalize_preference(&self) -> Result<PreferenceIntent> {
        let winner = self
            .chosen_point
            .clone()
            .ok_or_else(|| Error::state("plane session is not completed"))?;
        let reps = self.plane.representatives().into_iter().filter(|x| in_unit_box(x));
        Ok(PreferenceIntent::new(winner, reps))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("session serialization is infallible")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::invalid(format!("plane session JSON: {e}")))
    }
}

#[derive(Serialize, Deserialize)]
struct PlaneSessionDoc {
    #[serde(flatten)]
    plane: Plane,
    grid: GridSpec,
    level: usize,
    grid_center: [f64; 2],
    choices: Vec<[i64; 3]>,
}

impl Serialize for PlaneSession {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PlaneSessionDoc {
            plane: self.plane.clone(),
            grid: self.spec,
            level: self.level,
            grid_center: [self.grid_center.s, self.grid_center.t],
            choices: self.choices.iter().map(|c| [c.level as i64, c.i as i64, c.j as i64]).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for PlaneSession {
    /// Replays the recorded clicks on a fresh session, so a restored session
    /// is bit-identical to the original, and rejects inconsistent documents.
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let doc = PlaneSessionDoc::deserialize(d)?;
        let plane = Plane::from_parts(
            doc.plane.center().clone(),
            doc.plane.u().to_vec(),
            doc.plane.v().to_vec(),
            doc.plane.alpha_u(),
            doc.plane.alpha_v(),
            doc.plane.mode(),
        )
        .map_err(D::Error::custom)?;
        let mut session = PlaneSession::new(plane, doc.grid).map_err(D::Error::custom)?;
        for (k, c) in doc.choices.iter().enumerate() {
            if c[0] != k as i64 {
                return Err(D::Error::custom(format!("choice {k} recorded at level {}", c[0])));
            }
            let (i, j) = (i32::try_from(c[1]), i32::try_from(c[2]));
            let (Ok(i), Ok(j)) = (i, j) else {
                return Err(D::Error::custom("choice offset out of range"));
            };
            session.choose(i, j).map_err(D::Error::custom)?;
        }
        let center = [session.grid_center.s, session.grid_center.t];
        if session.level != doc.level || center != doc.grid_center {
            return Err(D::Error::custom("level or grid_center disagrees with the recorded choices"));
        }
        Ok(session)
    }
}

/// Number of distinct plane coordinates some click sequence can select,
/// ignoring box validity. Coordinates closer than `1e-12` count once.
pub fn reachable_set_size(spec: &GridSpec) -> Result<usize> {
    spec.validate()?;
    const QUANTUM: f64 = 1e-12;
    let key = |s: f64, t: f64| ((s / QUANTUM).round() as i64, (t / QUANTUM).round() as i64);
    let mut centers = vec![(0.0, 0.0)];
    let mut reached = HashSet::new();
    for level in 0..spec.levels {
        let h = spec.spacing(level);
        let mut next = Vec::new();
        reached.clear();
        for &(s0, t0) in &centers {
            for (i, j) in spec.offsets() {
                let (s, t) = (s0 + i as f64 * h, t0 + j as f64 * h);
                if reached.insert(key(s, t)) {
                    next.push((s, t));
                }
            }
        }
        centers = next;
    }
    Ok(reached.len())
}

/// Index of the largest score, first one on ties; NaN never wins.
fn argmax_first(scores: impl IntoIterator<Item = f64>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (k, v) in scores.into_iter().enumerate() {
        if v.is_nan() {
            continue;
        }
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((k, v));
        }
    }
    best.map(|(k, _)| k)
}

/// Runs a plane session with a simulated user who clicks, at every level,
/// the valid cell the oracle likes best.
pub fn simulate_plane_session<F>(plane: &Plane, spec: &GridSpec, mut oracle: F) -> Result<(ParamVector, PreferenceIntent)>
where
    F: FnMut(&[f64]) -> f64,
{
    let mut session = PlaneSession::new(plane.clone(), *spec)?;
    while !session.completed() {
        let cells = session.grid_cells()?;
        let scores = cells.iter().map(|c| if c.valid { oracle(&c.point) } else { f64::NAN });
        let scores: Vec<f64> = scores.collect();
        let k = argmax_first(scores)
            .ok_or_else(|| Error::Simulation(format!("no selectable cell at level {}", session.level())))?;
        session.choose(cells[k].i, cells[k].j)?;
    }
    let intent = session.finalize_preference()?;
    Ok((intent.winner.clone(), intent))
}

/// Like [`simulate_plane_session`] but the user picks the best point of a
/// dense `side × side` lattice over `[−1, 1]²` instead of zooming.
pub fn simulate_plane_continuous<F>(plane: &Plane, side: usize, mut oracle: F) -> Result<(ParamVector, PreferenceIntent)>
where
    F: FnMut(&[f64]) -> f64,
{
    if side < 2 {
        return Err(Error::invalid("continuous lattice needs at least 2 points per side"));
    }
    let coord = |k: usize| -1.0 + 2.0 * k as f64 / (side - 1) as f64;
    let points: Vec<ParamVector> = (0..side)
        .flat_map(|a| (0..side).map(move |b| PlaneLocalCoord::new(coord(a), coord(b))))
        .map(|c| plane.point(c))
        .collect();
    let scores: Vec<f64> = points.iter().map(|p| if in_unit_box(p) { oracle(p) } else { f64::NAN }).collect();
    let k = argmax_first(scores).ok_or_else(|| Error::Simulation("no selectable lattice point".into()))?;
    let winner = points[k].clone();
    let reps = plane.representatives().into_iter().filter(|x| in_unit_box(x));
    Ok((winner.clone(), PreferenceIntent::new(winner, reps)))
}

/// A slider over a line, discretized into `samples` evenly spaced points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineSession {
    pub line: Line,
    pub samples: usize,
    pub chosen_point: Option<ParamVector>,
}

impl LineSession {
    pub const DEFAULT_SAMPLES: usize = 1000;

    pub fn new(line: Line, samples: usize) -> Result<Self> {
        if samples < 2 {
            return Err(Error::invalid("a line session needs at least 2 samples"));
        }
        Ok(Self { line, samples, chosen_point: None })
    }

    pub fn sample(&self, k: usize) -> ParamVector {
        let t = if k + 1 == self.samples { 1.0 } else { k as f64 / (self.samples - 1) as f64 };
        self.line.point(t)
    }
}

/// Picks the oracle's favourite of the line samples; the losers are the two
/// endpoints (`x⁺` and `x^EI`) minus any duplicate of the winner.
pub fn simulate_line_session<F>(line: &Line, samples: usize, mut oracle: F) -> Result<(ParamVector, PreferenceIntent)>
where
    F: FnMut(&[f64]) -> f64,
{
    let mut session = LineSession::new(line.clone(), samples)?;
    let scores: Vec<f64> = (0..samples).map(|k| oracle(&session.sample(k))).collect();
    let k = argmax_first(scores).ok_or_else(|| Error::Simulation("oracle returned NaN everywhere".into()))?;
    let winner = session.sample(k);
    session.chosen_point = Some(winner.clone());
    Ok((winner.clone(), PreferenceIntent::new(winner, [line.start.clone(), line.end.clone()])))
}
