//! ARD Matérn 5/2 covariance.
//!
//! `k(x, y) = a (1 + √5 r + 5r²/3) exp(−√5 r)` with
//! `r² = Σ_k (x_k − y_k)² / θ_k²`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SQRT5: f64 = 2.236_067_977_499_79;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelHyperparams {
    pub amplitude: f64,
    pub length_scales: Vec<f64>,
}

impl KernelHyperparams {
    pub fn new(amplitude: f64, length_scales: Vec<f64>) -> Result<Self> {
        if !(amplitude > 0.0 && amplitude.is_finite()) {
            return Err(Error::invalid(format!("amplitude must be positive, got {amplitude}")));
        }
        if length_scales.is_empty() {
            return Err(Error::invalid("at least one length scale is required"));
        }
        if let Some(l) = length_scales.iter().find(|l| !(**l > 0.0 && l.is_finite())) {
            return Err(Error::invalid(format!("length scales must be positive, got {l}")));
        }
        Ok(Self { amplitude, length_scales })
    }

    pub fn dim(&self) -> usize {
        self.length_scales.len()
    }

    /// `[log a, log θ_1, …, log θ_n]`.
    pub fn to_log(&self) -> Vec<f64> {
        std::iter::once(self.amplitude.ln())
            .chain(self.length_scales.iter().map(|l| l.ln()))
            .collect()
    }

    pub fn from_log(log_params: &[f64]) -> Self {
        Self {
            amplitude: log_params[0].exp(),
            length_scales: log_params[1..].iter().map(|l| l.exp()).collect(),
        }
    }

    /// Scaled distance `r` between two points.
    pub(crate) fn scaled_distance(&self, x: &[f64], y: &[f64]) -> f64 {
        x.iter()
            .zip(y)
            .zip(&self.length_scales)
            .map(|((a, b), l)| {
                let d = (a - b) / l;
                d * d
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Kernel value without dimension checks.
    pub(crate) fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        self.amplitude * matern52(self.scaled_distance(x, y))
    }

    /// Gradient of `k(x, y)` with respect to `x`, written into `out`.
    /// Returns the kernel value.
    pub(crate) fn eval_with_grad_x(&self, x: &[f64], y: &[f64], out: &mut [f64]) -> f64 {
        let r = self.scaled_distance(x, y);
        let e = (-SQRT5 * r).exp();
        // dk/dx_k = −a (5/3)(1 + √5 r) e^{−√5 r} (x_k − y_k) / θ_k²
        let common = -self.amplitude * (5.0 / 3.0) * (1.0 + SQRT5 * r) * e;
        for (k, o) in out.iter_mut().enumerate() {
            let l = self.length_scales[k];
            *o = common * (x[k] - y[k]) / (l * l);
        }
        self.amplitude * (1.0 + SQRT5 * r + 5.0 * r * r / 3.0) * e
    }
}

/// Unit-amplitude Matérn 5/2 profile.
pub(crate) fn matern52(r: f64) -> f64 {
    (1.0 + SQRT5 * r + 5.0 * r * r / 3.0) * (-SQRT5 * r).exp()
}

/// `(1/r) dm/dr · (−1)`, i.e. `(5/3)(1 + √5 r) e^{−√5 r}`; finite at `r = 0`.
pub(crate) fn matern52_radial(r: f64) -> f64 {
    (5.0 / 3.0) * (1.0 + SQRT5 * r) * (-SQRT5 * r).exp()
}

/// Evaluates the kernel between two points of equal dimension.
pub fn kernel(x: &[f64], y: &[f64], h: &KernelHyperparams) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), found: y.len() });
    }
    if x.len() != h.dim() {
        return Err(Error::DimensionMismatch { expected: h.dim(), found: x.len() });
    }
    Ok(h.eval(x, y))
}
