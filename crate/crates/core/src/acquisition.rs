//! Expected improvement for points and planes.

use rand::Rng;
use serde::{Deserialize, Serialize};


use crate::optim::Lbfgs;
use crate::pref::FittedModel;
use crate::space::ParamVector;
use crate::subspace::{Plane, PlaneLocalCoord};

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// How gradients of the acquisition are obtained inside the optimizers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientMode {
    /// Closed-form chain rule through the GP posterior.
    #[default]
    Analytic,
    /// Central differences with `gradient_step`.
    CentralDifference,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcquisitionConfig {
    pub restarts: usize,
    pub max_iterations: usize,
    pub gradient_step: f64,
    /// The plane lattice has `lattice_side²` samples.
    pub lattice_side: usize,
    pub gradient: GradientMode,
}

impl Default for AcquisitionConfig {
    fn default() -> Self {
        Self {
            restarts: 10,
            max_iterations: 200,
            gradient_step: 1e-5,
            lattice_side: 5,
            gradient: GradientMode::Analytic,
        }
    }
}

impl AcquisitionConfig {
    pub fn validate(&self) -> crate::Result<()> {
        if self.restarts == 0 || self.max_iterations == 0 || !(self.gradient_step > 0.0) {
            return Err(crate::Error::invalid("acquisition settings must be positive"));
        }
        if self.lattice_side < 3 || self.lattice_side % 2 == 0 {
            return Err(crate::Error::invalid("lattice side must be odd and at least 3"));
        }
        Ok(())
    }

    pub(crate) fn optimizer(&self) -> Lbfgs {
        Lbfgs {
            max_iterations: self.max_iterations,
            gradient_tolerance: 1e-8,
            relative_tolerance: 1e-10,
            ..Lbfgs::default()
        }
    }
}

pub fn std_normal_pdf(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
}

pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// `σ [γ Φ(γ) + φ(γ)]` with `γ = (μ − μ⁺) / σ`; zero when `σ = 0`.
pub fn ei_from_moments(mean: f64, sigma: f64, best_mean: f64) -> f64 {
    if !(sigma > 0.0) {
        return 0.0;
    }
    let gamma = (mean - best_mean) / sigma;
    (sigma * (gamma * std_normal_cdf(gamma) + std_normal_pdf(gamma))).max(0.0)
}

/// Posterior variances at or below this level are indistinguishable from the
/// conditioning jitter and are treated as zero.
fn variance_floor(model: &FittedModel) -> f64 {
    2.0 * model.jitter()
}

/// Expected improvement of `x` over the posterior mean at `x_plus`.
pub fn expected_improvement(model: &FittedModel, x: &[f64], x_plus: &[f64]) -> f64 {
    let best_mean = model.posterior_at(x_plus).mean;
    ei_at(model, x, best_mean)
}

pub(crate) fn ei_at(model: &FittedModel, x: &[f64], best_mean: f64) -> f64 {
    let post = model.posterior_at(x);
    if post.variance <= variance_floor(model) {
        return 0.0;
    }
    ei_from_moments(post.mean, post.variance.sqrt(), best_mean)
}

/// EI and its gradient with respect to `x`.
pub(crate) fn ei_with_grad(model: &FittedModel, x: &[f64], best_mean: f64, grad: &mut [f64]) -> f64 {
    let d = x.len();
    let mut dmean = vec![0.0; d];
    let mut dvar = vec![0.0; d];
    let post = model.posterior_with_grad(x, &mut dmean, &mut dvar);
    if post.variance <= variance_floor(model) {
        grad.fill(0.0);
        return 0.0;
    }
    let sigma = post.variance.sqrt();
    let gamma = (post.mean - best_mean) / sigma;
    let cdf = std_normal_cdf(gamma);
    let pdf = std_normal_pdf(gamma);
    // ∂EI/∂μ = Φ(γ), ∂EI/∂σ = φ(γ), ∂σ = ∂σ² / 2σ
    for k in 0..d {
        grad[k] = cdf * dmean[k] + pdf * dvar[k] / (2.0 * sigma);
    }
    (sigma * (gamma * cdf + pdf)).max(0.0)
}

/// EI gradient by central differences (evaluations may fall slightly
/// outside the unit box; the posterior is defined everywhere).
pub(crate) fn ei_fd_grad(model: &FittedModel, x: &[f64], best_mean: f64, step: f64, grad: &mut [f64]) -> f64 {
    let mut probe = x.to_vec();
    for k in 0..x.len() {
        probe[k] = x[k] + step;
        let fp = ei_at(model, &probe, best_mean);
        probe[k] = x[k] - step;
        let fm = ei_at(model, &probe, best_mean);
        probe[k] = x[k];
        grad[k] = (fp - fm) / (2.0 * step);
    }
    ei_at(model, x, best_mean)
}

pub(crate) fn ei_value_grad(
    model: &FittedModel,
    x: &[f64],
    best_mean: f64,
    config: &AcquisitionConfig,
    grad: &mut [f64],
) -> f64 {
    match config.gradient {
        GradientMode::Analytic => ei_with_grad(model, x, best_mean, grad),
        GradientMode::CentralDifference => ei_fd_grad(model, x, best_mean, config.gradient_step, grad),
    }
}

/// EI at `x` and its gradient, computed the way the optimizers do under
/// `config.gradient`.
pub fn expected_improvement_gradient(
    model: &FittedModel,
    x: &[f64],
    x_plus: &[f64],
    config: &AcquisitionConfig,
) -> (f64, Vec<f64>) {
    let mut grad = vec![0.0; x.len()];
    let best_mean = model.posterior_at(x_plus).mean;
    let value = ei_value_grad(model, x, best_mean, config, &mut grad);
    (value, grad)
}

/// Global EI maximizer over the unit box: `restarts` uniform starts plus one
/// start near `x_plus`, each refined by bounded L-BFGS. Ties go to the
/// earliest start.
pub fn maximize_ei<R: Rng + ?Sized>(
    model: &FittedModel,
    x_plus: &[f64],
    config: &AcquisitionConfig,
    rng: &mut R,
) -> ParamVector {
    let n = model.dim();
    let best_mean = model.posterior_at(x_plus).mean;
    let mut starts: Vec<Vec<f64>> =
        (0..config.restarts).map(|_| (0..n).map(|_| rng.random::<f64>()).collect()).collect();
    starts.push(
        x_plus
            .iter()
            .map(|c| (c + rng.random_range(-0.05..=0.05)).clamp(0.0, 1.0))
            .collect(),
    );

    let bounds = vec![(0.0, 1.0); n];
    let optimizer = config.optimizer();
    let mut best: Option<(Vec<f64>, f64)> = None;
    for start in &starts {
        let objective = |x: &[f64], g: &mut [f64]| {
            let v = ei_value_grad(model, x, best_mean, config, g);
            for gk in g.iter_mut() {
                *gk = -*gk;
            }
            -v
        };
        let candidate = match optimizer.minimize(objective, start, Some(&bounds)) {
            Ok(m) => (m.x, -m.value),
            Err(_) => (start.clone(), ei_at(model, start, best_mean)),
        };
        if best.as_ref().is_none_or(|b| candidate.1 > b.1) {
            best = Some(candidate);
        }
    }
    let (mut x, _) = best.expect("at least one start");
    for c in x.iter_mut() {
        *c = c.clamp(0.0, 1.0);
    }
    ParamVector::new(x).expect("optimizer iterates are finite")
}

/// Local coordinates of the `side × side` lattice over `[−1, 1]²`.
pub fn lattice_coords(side: usize) -> Vec<PlaneLocalCoord> {
    let step = 2.0 / (side - 1) as f64;
    let mut out = Vec::with_capacity(side * side);
    for a in 0..side {
        for b in 0..side {
            out.push(PlaneLocalCoord { s: -1.0 + a as f64 * step, t: -1.0 + b as f64 * step });
        }
    }
    out
}

/// Lattice points of the plane, clamped coordinate-wise into the unit box.
pub fn plane_lattice_points(plane: &Plane, side: usize) -> Vec<Vec<f64>> {
    lattice_coords(side)
        .into_iter()
        .map(|coord| {
            let mut p = plane.point_unchecked(coord);
            for c in p.iter_mut() {
                *c = c.clamp(0.0, 1.0);
            }
            p
        })
        .collect()
}

/// Mean EI over the plane's lattice samples.
pub fn plane_acquisition(model: &FittedModel, plane: &Plane, x_plus: &[f64], config: &AcquisitionConfig) -> f64 {
    let best_mean = model.posterior_at(x_plus).mean;
    let pts = plane_lattice_points(plane, config.lattice_side);
    let total: f64 = pts.iter().map(|p| ei_at(model, p, best_mean)).sum();
    total / pts.len() as f64
}
