//! Search subspaces: rhombus planes `P(c, u, v)` and lines.
//!
//! A plane has vertices `c + u`, `c − α_u u`, `c + v`, `c − α_v v`. The
//! scale factors `α ∈ [0, 1]` shorten a negative half-diagonal that would
//! otherwise leave the unit box.

use rand::Rng;
use rayon::prelude::*;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::acquisition::{ei_value_grad, lattice_coords, maximize_ei, AcquisitionConfig};
use crate::error::{Error, Result};
use crate::pref::{BestMode, FittedModel};
use crate::space::{dot, norm, ParamVector, SearchSpace};

/// Coordinates within `SNAP` of the unit box are moved onto it, so vertices
/// that are in the box up to rounding stay valid.
const SNAP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryMode {
    /// Shorten half-diagonals so every vertex lies in the box.
    #[default]
    ScaleHalfDiagonal,
    /// Leave the geometry alone; points outside the box are simply invalid.
    MaskOutside,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlaneLocalCoord {
    pub s: f64,
    pub t: f64,
}

impl PlaneLocalCoord {
    pub const CENTER: Self = Self { s: 0.0, t: 0.0 };

    pub fn new(s: f64, t: f64) -> Self {
        Self { s, t }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plane {
    #[serde(rename = "c")]
    center: ParamVector,
    u: Vec<f64>,
    v: Vec<f64>,
    alpha_u: f64,
    alpha_v: f64,
    mode: BoundaryMode,
}

impl Plane {
    /// Builds a plane without clipping (`α_u = α_v = 1`).
    pub fn new(center: ParamVector, u: Vec<f64>, v: Vec<f64>, mode: BoundaryMode) -> Result<Self> {
        Self::from_parts(center, u, v, 1.0, 1.0, mode)
    }

    pub fn from_parts(
        center: ParamVector,
        u: Vec<f64>,
        v: Vec<f64>,
        alpha_u: f64,
        alpha_v: f64,
        mode: BoundaryMode,
    ) -> Result<Self> {
        let n = center.dim();
        for d in [&u, &v] {
            if d.len() != n {
                return Err(Error::DimensionMismatch { expected: n, found: d.len() });
            }
            if d.iter().any(|x| !x.is_finite()) {
                return Err(Error::invalid("plane half-diagonals must be finite"));
            }
        }
        if !(0.0..=1.0).contains(&alpha_u) || !(0.0..=1.0).contains(&alpha_v) {
            return Err(Error::invalid("vertex scale factors must lie in [0, 1]"));
        }
        Ok(Self { center, u, v, alpha_u, alpha_v, mode })
    }

    pub fn center(&self) -> &ParamVector {
        &self.center
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub fn v(&self) -> &[f64] {
        &self.v
    }

    pub fn alpha_u(&self) -> f64 {
        self.alpha_u
    }

    pub fn alpha_v(&self) -> f64 {
        self.alpha_v
    }

    pub fn mode(&self) -> BoundaryMode {
        self.mode
    }

    pub fn dim(&self) -> usize {
        self.center.dim()
    }

    /// `|u·v| / (‖u‖‖v‖)`, zero for a degenerate half-diagonal.
    pub fn orthogonality_error(&self) -> f64 {
        let scale = norm(&self.u) * norm(&self.v);
        if scale == 0.0 {
            0.0
        } else {
            dot(&self.u, &self.v).abs() / scale
        }
    }

    fn warp(&self, s: f64, alpha: f64) -> f64 {
        match self.mode {
            BoundaryMode::ScaleHalfDiagonal if s < 0.0 => alpha * s,
            _ => s,
        }
    }

    /// Warped local coordinates `(f_u(s), f_v(t))`.
    pub fn warped(&self, coord: PlaneLocalCoord) -> (f64, f64) {
        (self.warp(coord.s, self.alpha_u), self.warp(coord.t, self.alpha_v))
    }

    pub(crate) fn point_unchecked(&self, coord: PlaneLocalCoord) -> Vec<f64> {
        let (a, b) = self.warped(coord);
        self.center
            .iter()
            .zip(&self.u)
            .zip(&self.v)
            .map(|((c, u), v)| {
                let x = c + a * u + b * v;
                if (-SNAP..0.0).contains(&x) {
                    0.0
                } else if x > 1.0 && x <= 1.0 + SNAP {
                    1.0
                } else {
                    x
                }
            })
            .collect()
    }

    /// Maps local coordinates onto the plane. In `MaskOutside` mode the
    /// result may leave the unit box.
    pub fn point(&self, coord: PlaneLocalCoord) -> ParamVector {
        ParamVector::new(self.point_unchecked(coord)).expect("plane geometry is finite")
    }

    /// `[c + u, c − α_u u, c + v, c − α_v v]`.
    pub fn vertices(&self) -> [ParamVector; 4] {
        [
            self.point(PlaneLocalCoord::new(1.0, 0.0)),
            self.point(PlaneLocalCoord::new(-1.0, 0.0)),
            self.point(PlaneLocalCoord::new(0.0, 1.0)),
            self.point(PlaneLocalCoord::new(0.0, -1.0)),
        ]
    }

    /// The center followed by the four vertices.
    pub fn representatives(&self) -> Vec<ParamVector> {
        let mut out = vec![self.point(PlaneLocalCoord::CENTER)];
        out.extend(self.vertices());
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("plane serialization is infallible")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let p: Plane = serde_json::from_str(text).map_err(|e| Error::invalid(format!("plane JSON: {e}")))?;
        Self::from_parts(p.center, p.u, p.v, p.alpha_u, p.alpha_v, p.mode)
    }
}

/// Segment `{(1 − t) start + t end | t ∈ [0, 1]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub start: ParamVector,
    pub end: ParamVector,
}

impl Line {
    pub fn point(&self, t: f64) -> ParamVector {
        let p = self
            .start
            .iter()
            .zip(self.end.iter())
            .map(|(a, b)| if t == 0.0 { *a } else if t == 1.0 { *b } else { (1.0 - t) * a + t * b })
            .collect();
        ParamVector::new(p).expect("line geometry is finite")
    }
}

/// Largest `β ∈ [0, 1]` with `c + β·d` inside the unit box.
fn max_forward_scale(c: &[f64], d: &[f64]) -> f64 {
    let mut beta: f64 = 1.0;
    for (ck, dk) in c.iter().zip(d) {
        if *dk > 0.0 {
            beta = beta.min((1.0 - ck) / dk);
        } else if *dk < 0.0 {
            beta = beta.min(ck / -dk);
        }
    }
    beta.max(0.0)
}

/// Largest `α ∈ [0, 1]` with `c − α·d` inside the unit box.
fn max_backward_scale(c: &[f64], d: &[f64]) -> f64 {
    let neg: Vec<f64> = d.iter().map(|x| -x).collect();
    max_forward_scale(c, &neg)
}

/// Shortens the negative half-diagonals so `c − α_u u` and `c − α_v v` lie in
/// the box; a no-op (`α = 1`) in `MaskOutside` mode.
pub fn clip_negative_vertices(plane: &Plane, space: &SearchSpace) -> Result<Plane> {
    space.check_dim(&plane.center)?;
    let mut out = plane.clone();
    match plane.mode {
        BoundaryMode::MaskOutside => {
            out.alpha_u = 1.0;
            out.alpha_v = 1.0;
        }
        BoundaryMode::ScaleHalfDiagonal => {
            out.alpha_u = max_backward_scale(&plane.center, &plane.u);
            out.alpha_v = max_backward_scale(&plane.center, &plane.v);
        }
    }
    Ok(out)
}

/// Scales `d` down (direction preserved) so `c + d` lies in the box.
fn fit_forward(c: &[f64], d: &mut [f64]) {
    let beta = max_forward_scale(c, d);
    if beta < 1.0 {
        for x in d.iter_mut() {
            *x *= beta;
        }
    }
}

fn gaussian_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

/// Unit vector orthogonal to `u` (which may be zero), drawn from a Gaussian.
fn random_orthogonal_unit<R: Rng + ?Sized>(rng: &mut R, u: &[f64]) -> Vec<f64> {
    let uu = dot(u, u);
    loop {
        let mut b = gaussian_vector(rng, u.len());
        if uu > 0.0 {
            let proj = dot(&b, u) / uu;
            for (bk, uk) in b.iter_mut().zip(u) {
                *bk -= proj * uk;
            }
        }
        let len = norm(&b);
        if len > 1e-8 {
            return b.into_iter().map(|x| x / len).collect();
        }
    }
}

/// Orthonormal pair from two Gaussian draws (Gram–Schmidt). For `n = 1` the
/// second vector is zero.
fn random_orthonormal_pair<R: Rng + ?Sized>(rng: &mut R, n: usize) -> (Vec<f64>, Vec<f64>) {
    let u = random_orthogonal_unit(rng, &vec![0.0; n]);
    if n == 1 {
        return (u, vec![0.0]);
    }
    let v = random_orthogonal_unit(rng, &u);
    (u, v)
}

/// Square of half-diagonal `half_extent` centered in the box with a random
/// orientation. Every vertex stays inside because each coordinate offset is
/// bounded by the half-diagonal's length.
pub fn initial_plane<R: Rng + ?Sized>(space: &SearchSpace, rng: &mut R, half_extent: f64) -> Result<Plane> {
    if !(half_extent > 0.0 && half_extent <= 0.5) {
        return Err(Error::invalid(format!("half extent must lie in (0, 0.5], got {half_extent}")));
    }
    let (u, v) = random_orthonormal_pair(rng, space.dim());
    let scale = |d: Vec<f64>| d.into_iter().map(|x| x * half_extent).collect();
    Plane::new(space.center(), scale(u), scale(v), BoundaryMode::ScaleHalfDiagonal)
}

/// Random baseline: unit-length orthogonal half-diagonals centered at
/// `x_plus`, then fitted to the box according to `mode`.
pub fn random_plane<R: Rng + ?Sized>(x_plus: &ParamVector, mode: BoundaryMode, rng: &mut R) -> Result<Plane> {
    let n = x_plus.dim();
    if n < 2 {
        return Err(Error::invalid("a random plane needs at least two dimensions"));
    }
    let space = SearchSpace::new(n)?;
    space.check(x_plus)?;
    let (mut u, mut v) = random_orthonormal_pair(rng, n);
    if mode == BoundaryMode::ScaleHalfDiagonal {
        fit_forward(x_plus, &mut u);
        fit_forward(x_plus, &mut v);
    }
    clip_negative_vertices(&Plane::new(x_plus.clone(), u, v, mode)?, &space)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlaneConfig {
    pub acquisition: AcquisitionConfig,
    pub best_mode: BestMode,
    /// Weight `w` of the soft orthogonality term `−w (u·v)²`.
    pub penalty_weight: f64,
    /// Length of the fallback `u` when `x^EI ≈ x⁺`.
    pub degenerate_length: f64,
    pub boundary_mode: BoundaryMode,
}

impl Default for PlaneConfig {
    fn default() -> Self {
        Self {
            acquisition: AcquisitionConfig::default(),
            best_mode: BestMode::PosteriorMean,
            penalty_weight: 1000.0,
            degenerate_length: 0.1,
            boundary_mode: BoundaryMode::ScaleHalfDiagonal,
        }
    }
}

/// Outcome of the multi-start search for the second half-diagonal.
#[derive(Debug, Clone)]
pub struct HalfDiagonalSearch {
    pub v: Vec<f64>,
    pub value: f64,
    /// `(starting v, penalized objective there)` for every restart.
    pub starts: Vec<(Vec<f64>, f64)>,
}

/// Penalized plane objective `â(P(c, u, v)) − w (u·v)²` and its gradient in `v`.
struct HalfDiagonalObjective<'a> {
    model: &'a FittedModel,
    center: &'a [f64],
    u: &'a [f64],
    alpha_u: f64,
    best_mean: f64,
    config: &'a PlaneConfig,
    coords: Vec<PlaneLocalCoord>,
    /// EI at lattice points with `t = 0`, which do not move with `v`.
    fixed: Vec<Option<f64>>,
}

impl<'a> HalfDiagonalObjective<'a> {
    fn new(model: &'a FittedModel, center: &'a ParamVector, u: &'a [f64], config: &'a PlaneConfig) -> Self {
        let mut objective = Self {
            model,
            center,
            u,
            alpha_u: max_backward_scale(center, u),
            best_mean: model.posterior_at(center).mean,
            config,
            coords: lattice_coords(config.acquisition.lattice_side),
            fixed: Vec::new(),
        };
        objective.fix_v_independent_points();
        objective
    }

    fn eval(&self, v: &[f64], grad: &mut [f64]) -> f64 {
        let n = v.len();
        let count = self.coords.len() as f64;
        let mut total = 0.0;
        let mut point = vec![0.0; n];
        let mut clamped = vec![false; n];
        let mut ei_grad = vec![0.0; n];
        grad.fill(0.0);
        for (coord, fixed) in self.coords.iter().zip(&self.fixed) {
            if let Some(value) = fixed {
                total += value;
                continue;
            }
            // v is box-bounded so that c ± v stays inside: α_v = 1
            let a = self.u_scale(coord);
            let b = coord.t;
            for k in 0..n {
                let x = self.center[k] + a * self.u[k] + b * v[k];
                point[k] = x.clamp(0.0, 1.0);
                clamped[k] = x != point[k];
            }
            total += ei_value_grad(self.model, &point, self.best_mean, &self.config.acquisition, &mut ei_grad);
            if b != 0.0 {
                for k in 0..n {
                    if !clamped[k] {
                        grad[k] += b * ei_grad[k] / count;
                    }
                }
            }
        }
        let uv = dot(self.u, v);
        for k in 0..n {
            grad[k] -= 2.0 * self.config.penalty_weight * uv * self.u[k];
        }
        total / count - self.config.penalty_weight * uv * uv
    }

    fn u_scale(&self, coord: &PlaneLocalCoord) -> f64 {
        if coord.s < 0.0 {
            self.alpha_u * coord.s
        } else {
            coord.s
        }
    }

    fn fix_v_independent_points(&mut self) {
        let mut scratch = vec![0.0; self.u.len()];
        self.fixed = self
            .coords
            .iter()
            .map(|coord| {
                (coord.t == 0.0).then(|| {
                    let a = self.u_scale(coord);
                    let point: Vec<f64> =
                        self.center.iter().zip(self.u).map(|(c, u)| (c + a * u).clamp(0.0, 1.0)).collect();
                    ei_value_grad(self.model, &point, self.best_mean, &self.config.acquisition, &mut scratch)
                })
            })
            .collect();
    }
}

/// Maximizes the penalized plane objective over `v` with `|v_k| ≤ min(c_k, 1 − c_k)`
/// from `restarts` uniform starting points.
pub fn optimize_half_diagonal<R: Rng + ?Sized>(
    model: &FittedModel,
    center: &ParamVector,
    u: &[f64],
    config: &PlaneConfig,
    rng: &mut R,
) -> Result<HalfDiagonalSearch> {
    let n = center.dim();
    let bounds: Vec<(f64, f64)> = center.iter().map(|c| {
        let b = c.min(1.0 - c).max(0.0);
        (-b, b)
    }).collect();
    let objective = HalfDiagonalObjective::new(model, center, u, config);
    let starts: Vec<Vec<f64>> = (0..config.acquisition.restarts)
        .map(|_| bounds.iter().map(|(lo, hi)| if hi > lo { rng.random_range(*lo..=*hi) } else { 0.0 }).collect())
        .collect();

    // Restarts are independent; the reduction below runs in start order, so
    // the outcome does not depend on scheduling.
    let optimizer = config.acquisition.optimizer();
    let runs: Vec<_> = starts
        .into_par_iter()
        .map(|start| {
            let mut scratch = vec![0.0; n];
            let start_value = objective.eval(&start, &mut scratch);
            let result = optimizer.minimize(
                |v: &[f64], g: &mut [f64]| {
                    let val = objective.eval(v, g);
                    for gk in g.iter_mut() {
                        *gk = -*gk;
                    }
                    -val
                },
                &start,
                Some(&bounds),
            );
            (start, start_value, result)
        })
        .collect();
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut records = Vec::with_capacity(runs.len());
    for (start, start_value, result) in runs {
        if let Ok(m) = result {
            let value = -m.value;
            if value.is_finite() && best.as_ref().is_none_or(|b| value > b.1) {
                best = Some((m.x, value));
            }
        }
        records.push((start, start_value));
    }
    let (v, value) = best.ok_or_else(|| {
        Error::ConstructionFailure("no restart produced a finite plane objective".into())
    })?;
    Ok(HalfDiagonalSearch { v, value, starts: records })
}

/// Builds the next search plane: centered at `x⁺`, with `x^EI` as the `(+1, 0)`
/// vertex, and the orthogonal half-diagonal chosen to maximize the mean EI
/// over the plane.
pub fn construct_plane<R: Rng + ?Sized>(model: &FittedModel, config: &PlaneConfig, rng: &mut R) -> Result<Plane> {
    config.acquisition.validate()?;
    let data = model.dataset();
    if data.len() < 2 || data.records().is_empty() {
        return Err(Error::invalid("plane construction needs a fitted model with data"));
    }
    let space = data.space();
    let x_plus = data.points()[model.current_best(config.best_mode)?].clone();
    let x_ei = maximize_ei(model, &x_plus, &config.acquisition, rng);
    let mut u: Vec<f64> = x_ei.iter().zip(x_plus.iter()).map(|(e, c)| e - c).collect();
    if norm(&u) < 1e-6 {
        u = random_orthogonal_unit(rng, &vec![0.0; u.len()])
            .into_iter()
            .map(|x| x * config.degenerate_length)
            .collect();
        fit_forward(&x_plus, &mut u);
    }

    let search = optimize_half_diagonal(model, &x_plus, &u, config, rng)?;
    let mut v = search.v;
    let uu = dot(&u, &u);
    if uu > 0.0 {
        let proj = dot(&u, &v) / uu;
        for (vk, uk) in v.iter_mut().zip(&u) {
            *vk -= proj * uk;
        }
    }
    if norm(&v) < 1e-9 {
        v = random_orthogonal_unit(rng, &u).into_iter().map(|x| x * config.degenerate_length).collect();
    }
    if config.boundary_mode == BoundaryMode::ScaleHalfDiagonal {
        fit_forward(&x_plus, &mut v);
    }
    clip_negative_vertices(&Plane::new(x_plus, u, v, config.boundary_mode)?, &space)
}

/// Line from `x⁺` to the EI maximizer.
pub fn construct_line<R: Rng + ?Sized>(
    model: &FittedModel,
    config: &AcquisitionConfig,
    best_mode: BestMode,
    rng: &mut R,
) -> Result<Line> {
    let x_plus = model.dataset().points()[model.current_best(best_mode)?].clone();
    let end = maximize_ei(model, &x_plus, config, rng);
    Ok(Line { start: x_plus, end })
}

/// Penalized objective value of a candidate `v` (exposed for diagnostics).
pub fn half_diagonal_objective(
    model: &FittedModel,
    center: &ParamVector,
    u: &[f64],
    v: &[f64],
    config: &PlaneConfig,
) -> f64 {
    let objective = HalfDiagonalObjective::new(model, center, u, config);
    let mut scratch = vec![0.0; v.len()];
    objective.eval(v, &mut scratch)
}
