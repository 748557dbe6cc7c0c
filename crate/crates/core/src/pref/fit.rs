//! Joint MAP estimation of latent goodness values and kernel hyperparameters.
//!
//! The maximized objective is
//!
//! ```text
//! Σ_r log P_BTL(r | g) + log N(g; 0, K_h + jitter·I) + Σ_p log LN(h_p; log m_p, σ²)
//! ```
//!
//! over `g` and `η = log h`. For fixed `η` the problem is concave in `g` and is
//! solved by damped Newton iterations; the outer maximization over `η` uses
//! the profile objective, whose gradient is the partial derivative in `η` at
//! the inner optimum.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{matern52_radial, KernelHyperparams};
use crate::optim::Lbfgs;
use crate::pref::dataset::{Dataset, PreferenceRecord};
use crate::pref::likelihood::accumulate;
use crate::pref::model::{gram_matrix, FittedModel};

/// Log-normal priors on the amplitude and on every length scale, each
/// parameterized by its median: `log h ~ N(log median, log_variance)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperPrior {
    pub median_amplitude: f64,
    pub median_length_scale: f64,
    pub log_variance: f64,
}

impl Default for HyperPrior {
    fn default() -> Self {
        Self { median_amplitude: 0.2, median_length_scale: 0.5, log_variance: 0.01 }
    }
}

impl HyperPrior {
    fn validate(&self) -> Result<()> {
        if !(self.median_amplitude > 0.0 && self.median_length_scale > 0.0 && self.log_variance > 0.0) {
            return Err(Error::invalid("hyperprior parameters must be positive"));
        }
        Ok(())
    }

    pub fn medians(&self, dim: usize) -> KernelHyperparams {
        KernelHyperparams {
            amplitude: self.median_amplitude,
            length_scales: vec![self.median_length_scale; dim],
        }
    }

    fn log_median(&self, p: usize) -> f64 {
        if p == 0 {
            self.median_amplitude.ln()
        } else {
            self.median_length_scale.ln()
        }
    }

    /// Sum of log densities (with respect to `h`, not `log h`) and its
    /// gradient with respect to `log h`.
    fn log_density(&self, log_h: &[f64], grad: &mut [f64]) -> f64 {
        let var = self.log_variance;
        let norm = 0.5 * (2.0 * std::f64::consts::PI * var).ln();
        let mut total = 0.0;
        for (p, (&eta, gp)) in log_h.iter().zip(grad.iter_mut()).enumerate() {
            let z = eta - self.log_median(p);
            total += -eta - norm - z * z / (2.0 * var);
            *gp = -1.0 - z / var;
        }
        total
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub prior: HyperPrior,
    pub btl_scale: f64,
    /// Diagonal jitter relative to the amplitude.
    pub jitter_factor: f64,
    /// When false, hyperparameters stay at the prior medians.
    pub optimize_hyperparams: bool,
    pub gradient_tolerance: f64,
    pub max_iterations: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            prior: HyperPrior::default(),
            btl_scale: 0.01,
            jitter_factor: 1e-8,
            optimize_hyperparams: true,
            gradient_tolerance: 1e-6,
            max_iterations: 200,
        }
    }
}

struct Problem<'a> {
    data: &'a Dataset,
    /// Sorted so the likelihood sum does not depend on record order.
    records: Vec<PreferenceRecord>,
    config: &'a FitConfig,
}

struct Conditioned {
    chol: Cholesky<f64, Dyn>,
    gram: DMatrix<f64>,
}

struct LatentOptimum {
    g: DVector<f64>,
    cond: Conditioned,
}

impl<'a> Problem<'a> {
    fn new(data: &'a Dataset, config: &'a FitConfig) -> Result<Self> {
        config.prior.validate()?;
        if !(config.btl_scale > 0.0 && config.jitter_factor > 0.0) {
            return Err(Error::invalid("BTL scale and jitter factor must be positive"));
        }
        let mut records = data.records().to_vec();
        records.sort();
        Ok(Self { data, records, config })
    }

    fn condition(&self, h: &KernelHyperparams) -> Option<Conditioned> {
        let gram = gram_matrix(self.data, h, self.config.jitter_factor * h.amplitude);
        if gram.iter().any(|v| !v.is_finite()) {
            return None;
        }
        Cholesky::new(gram.clone()).map(|chol| Conditioned { chol, gram })
    }

    /// `Σ log P_BTL − ½ gᵀC⁻¹g`, the part of the objective that depends on `g`.
    fn latent_objective(&self, g: &DVector<f64>, cond: &Conditioned) -> (f64, DVector<f64>, DVector<f64>) {
        let acc = accumulate(&self.records, g.as_slice(), self.config.btl_scale, false);
        let alpha = cond.chol.solve(g);
        let value = acc.value - 0.5 * g.dot(&alpha);
        (value, acc.gradient - &alpha, alpha)
    }

    /// Damped Newton ascent on the concave latent subproblem.
    fn solve_latent(&self, h: &KernelHyperparams, start: &DVector<f64>) -> Option<LatentOptimum> {
        let cond = self.condition(h)?;
        let n = start.len();
        let scale = self.config.btl_scale;
        let mut g = start.clone();
        let (mut value, _, _) = self.latent_objective(&g, &cond);
        for _ in 0..100 {
            let acc = accumulate(&self.records, g.as_slice(), scale, true);
            let alpha = cond.chol.solve(&g);
            let grad = acc.gradient - &alpha;
            if grad.amax() <= 1e-10 {
                break;
            }
            let w = acc.neg_hessian.expect("requested");
            // (C⁻¹ + W) Δ = ∇  ⇔  (I + C W) Δ = C ∇
            let system = DMatrix::identity(n, n) + &cond.gram * &w;
            let rhs = &cond.gram * &grad;
            let step = system.lu().solve(&rhs)?;
            let decrement = step.dot(&grad);
            if !(decrement > 1e-24) {
                break;
            }
            let mut t = 1.0;
            let mut accepted = false;
            for _ in 0..40 {
                let trial = &g + t * &step;
                let (v, _, _) = self.latent_objective(&trial, &cond);
                if v.is_finite() && v >= value + 1e-4 * t * decrement {
                    g = trial;
                    value = v;
                    accepted = true;
                    break;
                }
                t *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        value.is_finite().then_some(LatentOptimum { g, cond })
    }

    /// Full objective at `(g, η)` and its partial derivatives in `η`.
    fn evaluate(&self, g: &DVector<f64>, log_h: &[f64], cond: &Conditioned, grad_h: &mut [f64]) -> (f64, DVector<f64>) {
        let h = KernelHyperparams::from_log(log_h);
        let n = g.len();
        let (latent_value, grad_g, alpha) = self.latent_objective(g, cond);
        let logdet: f64 = 2.0 * cond.chol.l_dirty().diagonal().iter().take(n).map(|v| v.ln()).sum::<f64>();
        let prior = self.config.prior.log_density(log_h, grad_h);
        let value = latent_value - 0.5 * logdet - 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln() + prior;

        // ∂/∂η [−½ gᵀC⁻¹g − ½ log|C|] = ½ αᵀ(∂C)α − ½ tr(C⁻¹ ∂C)
        // ∂C/∂log a = C
        grad_h[0] += 0.5 * g.dot(&alpha) - 0.5 * n as f64;
        if n > 1 {
            let cinv = cond.chol.inverse();
            let pts = self.data.points();
            let dim = h.dim();
            for i in 0..n {
                for j in 0..i {
                    let r = h.scaled_distance(&pts[i], &pts[j]);
                    let base = h.amplitude * matern52_radial(r);
                    let weight = alpha[i] * alpha[j] - cinv[(i, j)];
                    for k in 0..dim {
                        let d = (pts[i][k] - pts[j][k]) / h.length_scales[k];
                        grad_h[k + 1] += base * d * d * weight;
                    }
                }
            }
        }
        (value, grad_g)
    }
}

/// MAP objective at an arbitrary `(latent, log hyperparameters)` pair, with
/// its gradient laid out as `[∂/∂g…, ∂/∂log a, ∂/∂log θ…]`.
pub fn map_objective(
    dataset: &Dataset,
    config: &FitConfig,
    latent: &[f64],
    log_hyperparams: &[f64],
) -> Result<(f64, Vec<f64>)> {
    let dim = dataset.space().dim();
    if latent.len() != dataset.len() {
        return Err(Error::DimensionMismatch { expected: dataset.len(), found: latent.len() });
    }
    if log_hyperparams.len() != dim + 1 {
        return Err(Error::DimensionMismatch { expected: dim + 1, found: log_hyperparams.len() });
    }
    let problem = Problem::new(dataset, config)?;
    let h = KernelHyperparams::from_log(log_hyperparams);
    let cond = problem
        .condition(&h)
        .ok_or_else(|| Error::state("kernel matrix is not positive definite"))?;
    let mut grad_h = vec![0.0; dim + 1];
    let g = DVector::from_column_slice(latent);
    let (value, grad_g) = problem.evaluate(&g, log_hyperparams, &cond, &mut grad_h);
    let mut grad = grad_g.as_slice().to_vec();
    grad.extend(grad_h);
    Ok((value, grad))
}

/// Fits latent goodness values (and, unless disabled, hyperparameters) to
/// the dataset's preference records. Deterministic in its inputs.
pub fn map_fit(dataset: &Dataset, config: &FitConfig) -> Result<FittedModel> {
    if dataset.len() < 2 || dataset.records().is_empty() {
        return Err(Error::invalid("fitting needs at least two points and one preference record"));
    }
    let problem = Problem::new(dataset, config)?;
    let dim = dataset.space().dim();
    let n = dataset.len();
    let start_h = config.prior.medians(dim).to_log();
    let fail = |reason: &str, g: &DVector<f64>, eta: &[f64]| {
        let mut last_iterate = g.as_slice().to_vec();
        last_iterate.extend_from_slice(eta);
        Error::FitFailure { reason: reason.to_string(), last_iterate }
    };

    let zero = DVector::zeros(n);
    let mut warm = zero.clone();
    let log_h = if config.optimize_hyperparams {
        let optimizer = Lbfgs {
            max_iterations: config.max_iterations,
            gradient_tolerance: config.gradient_tolerance,
            relative_tolerance: 0.0,
            ..Lbfgs::default()
        };
        let mut last_good = (zero.clone(), start_h.clone());
        let profile = |eta: &[f64], grad: &mut [f64]| -> f64 {
            let h = KernelHyperparams::from_log(eta);
            let Some(opt) = problem.solve_latent(&h, &warm) else {
                return f64::NAN;
            };
            let (value, _) = problem.evaluate(&opt.g, eta, &opt.cond, grad);
            if !value.is_finite() {
                return f64::NAN;
            }
            for v in grad.iter_mut() {
                *v = -*v;
            }
            warm = opt.g.clone();
            last_good = (opt.g, eta.to_vec());
            -value
        };
        match optimizer.minimize(profile, &start_h, None) {
            Ok(m) => m.x,
            Err(_) => return Err(fail("objective is not finite at the prior medians", &last_good.0, &last_good.1)),
        }
    } else {
        start_h
    };

    let h = KernelHyperparams::from_log(&log_h);
    let opt = problem
        .solve_latent(&h, &warm)
        .ok_or_else(|| fail("latent optimization diverged", &warm, &log_h))?;
    if opt.g.iter().any(|v| !v.is_finite()) {
        return Err(fail("non-finite latent values", &warm, &log_h));
    }
    FittedModel::new(dataset.clone(), h, opt.g.as_slice().to_vec(), config.btl_scale, config.jitter_factor)
}
