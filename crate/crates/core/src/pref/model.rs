//! A GP conditioned on MAP latent goodness values.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::KernelHyperparams;
use crate::pref::dataset::Dataset;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Posterior {
    pub mean: f64,
    /// Clamped at zero.
    pub variance: f64,
}

/// How the current-best observed point `x⁺` is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BestMode {
    /// Observed point with the highest posterior mean.
    #[default]
    PosteriorMean,
    /// Winner of the most recent preference record.
    LastChosen,
}

/// Immutable once built; posterior queries take `&self` and are thread safe.
#[derive(Debug, Clone)]
pub struct FittedModel {
    dataset: Dataset,
    hyperparams: KernelHyperparams,
    latent: Vec<f64>,
    /// Column-major lower Cholesky factor of `K + jitter·I`.
    factor: Vec<f64>,
    /// `(K + jitter·I)⁻¹ ĝ`
    alpha: Vec<f64>,
    btl_scale: f64,
    jitter: f64,
}

impl FittedModel {
    /// Conditions the GP on `latent` (one value per dataset point). The jitter
    /// added to the kernel diagonal is `jitter_factor · amplitude`.
    pub fn new(
        dataset: Dataset,
        hyperparams: KernelHyperparams,
        latent: Vec<f64>,
        btl_scale: f64,
        jitter_factor: f64,
    ) -> Result<Self> {
        if latent.len() != dataset.len() {
            return Err(Error::DimensionMismatch { expected: dataset.len(), found: latent.len() });
        }
        if hyperparams.dim() != dataset.space().dim() {
            return Err(Error::DimensionMismatch {
                expected: dataset.space().dim(),
                found: hyperparams.dim(),
            });
        }
        if !(btl_scale > 0.0) || !(jitter_factor > 0.0) {
            return Err(Error::invalid("BTL scale and jitter must be positive"));
        }
        let jitter = jitter_factor * hyperparams.amplitude;
        let gram = gram_matrix(&dataset, &hyperparams, jitter);
        let chol = nalgebra::Cholesky::new(gram)
            .ok_or_else(|| Error::state("kernel matrix is not positive definite"))?;
        let l = chol.l();
        let n = dataset.len();
        let factor: Vec<f64> = l.as_slice().to_vec();
        let mut alpha = latent.clone();
        forward_solve(&factor, n, &mut alpha);
        backward_solve(&factor, n, &mut alpha);
        Ok(Self { dataset, hyperparams, latent, factor, alpha, btl_scale, jitter })
    }

    pub fn dataset(&self) -> &Dataset {
        &self.dataset
    }

    pub fn hyperparams(&self) -> &KernelHyperparams {
        &self.hyperparams
    }

    pub fn latent_goodness(&self) -> &[f64] {
        &self.latent
    }

    pub fn btl_scale(&self) -> f64 {
        self.btl_scale
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn dim(&self) -> usize {
        self.dataset.space().dim()
    }

    /// Lower-triangular factor `L` with `L Lᵀ = K + jitter·I`.
    pub fn kernel_matrix_factor(&self) -> DMatrix<f64> {
        let n = self.dataset.len();
        DMatrix::from_column_slice(n, n, &self.factor)
    }

    /// `K + jitter·I` recomputed from the kernel.
    pub fn kernel_matrix(&self) -> DMatrix<f64> {
        gram_matrix(&self.dataset, &self.hyperparams, self.jitter)
    }

    pub fn posterior(&self, x: &[f64]) -> Result<Posterior> {
        self.dataset.space().check_dim(x)?;
        Ok(self.posterior_at(x))
    }

    pub(crate) fn posterior_at(&self, x: &[f64]) -> Posterior {
        let n = self.dataset.len();
        let mut kstar: Vec<f64> =
            self.dataset.points().iter().map(|p| self.hyperparams.eval(x, p)).collect();
        let mean = kstar.iter().zip(&self.alpha).map(|(k, a)| k * a).sum();
        forward_solve(&self.factor, n, &mut kstar);
        let explained: f64 = kstar.iter().map(|v| v * v).sum();
        Posterior { mean, variance: (self.hyperparams.amplitude - explained).max(0.0) }
    }

    /// Posterior plus gradients of the mean and the (unclamped) variance with
    /// respect to `x`.
    pub(crate) fn posterior_with_grad(
        &self,
        x: &[f64],
        dmean: &mut [f64],
        dvar: &mut [f64],
    ) -> Posterior {
        let n = self.dataset.len();
        let d = x.len();
        let mut kstar = vec![0.0; n];
        let mut dk = vec![0.0; n * d];
        for (i, p) in self.dataset.points().iter().enumerate() {
            kstar[i] = self.hyperparams.eval_with_grad_x(x, p, &mut dk[i * d..(i + 1) * d]);
        }
        let mean = kstar.iter().zip(&self.alpha).map(|(k, a)| k * a).sum();
        let mut v = kstar;
        forward_solve(&self.factor, n, &mut v);
        let explained: f64 = v.iter().map(|t| t * t).sum();
        let mut w = v;
        backward_solve(&self.factor, n, &mut w);
        dmean.fill(0.0);
        dvar.fill(0.0);
        for i in 0..n {
            let row = &dk[i * d..(i + 1) * d];
            for k in 0..d {
                dmean[k] += self.alpha[i] * row[k];
                dvar[k] -= 2.0 * w[i] * row[k];
            }
        }
        Posterior { mean, variance: (self.hyperparams.amplitude - explained).max(0.0) }
    }

    /// Index of the current-best observed point.
    pub fn current_best(&self, mode: BestMode) -> Result<usize> {
        if self.dataset.is_empty() {
            return Err(Error::state("no observed points"));
        }
        match mode {
            BestMode::PosteriorMean => {
                let mut best = 0;
                let mut best_mean = f64::NEG_INFINITY;
                for (i, p) in self.dataset.points().iter().enumerate() {
                    let m = self.posterior_at(p).mean;
                    if m > best_mean {
                        best = i;
                        best_mean = m;
                    }
                }
                Ok(best)
            }
            BestMode::LastChosen => self
                .dataset
                .records()
                .last()
                .map(|r| r.winner())
                .ok_or_else(|| Error::state("no preference records")),
        }
    }
}

pub(crate) fn gram_matrix(data: &Dataset, h: &KernelHyperparams, jitter: f64) -> DMatrix<f64> {
    let pts = data.points();
    let n = pts.len();
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        k[(i, i)] = h.amplitude + jitter;
        for j in 0..i {
            let v = h.eval(&pts[i], &pts[j]);
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    k
}

/// Solves `L y = b` in place; `l` is column-major `n × n`.
pub(crate) fn forward_solve(l: &[f64], n: usize, b: &mut [f64]) {
    for j in 0..n {
        let col = &l[j * n..(j + 1) * n];
        b[j] /= col[j];
        let bj = b[j];
        for i in j + 1..n {
            b[i] -= col[i] * bj;
        }
    }
}

/// Solves `Lᵀ y = b` in place.
pub(crate) fn backward_solve(l: &[f64], n: usize, b: &mut [f64]) {
    for i in (0..n).rev() {
        let col = &l[i * n..(i + 1) * n];
        let mut s = b[i];
        for j in i + 1..n {
            s -= col[j] * b[j];
        }
        b[i] = s / col[i];
    }
}
