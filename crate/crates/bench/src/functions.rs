//! Synthetic goodness functions with known optima.

use std::fmt;

use seqplane_core::{Error, ParamVector, Result};
use serde::{Deserialize, Serialize};

/// `exp(−‖x − x*‖²)` with `x* = (0.3, …, 0.3)`; maximum 1.
pub fn isotropic_gaussian(x: &[f64]) -> f64 {
    (-x.iter().map(|v| (v - 0.3) * (v - 0.3)).sum::<f64>()).exp()
}

/// Rosenbrock rescaled to the unit box and negated, so the maximum 0 sits at
/// `(0.25, …, 0.25)`.
pub fn neg_scaled_rosenbrock(x: &[f64]) -> Result<f64> {
    if x.len() < 2 {
        return Err(Error::InvalidArgument("the Rosenbrock function needs n >= 2".into()));
    }
    Ok(-x
        .windows(2)
        .map(|w| {
            let a = 4.0 * w[1] - 16.0 * w[0] * w[0];
            let b = 1.0 - 4.0 * w[0];
            100.0 * a * a + b * b
        })
        .sum::<f64>())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FunctionKind {
    IsotropicGaussian,
    NegScaledRosenbrock,
}

impl FunctionKind {
    pub fn name(self) -> &'static str {
        match self {
            FunctionKind::IsotropicGaussian => "isotropic_gaussian",
            FunctionKind::NegScaledRosenbrock => "neg_scaled_rosenbrock",
        }
    }
}

impl fmt::Display for FunctionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticFunction {
    kind: FunctionKind,
    optimum_point: ParamVector,
    optimum_value: f64,
}

impl SyntheticFunction {
    pub fn new(kind: FunctionKind, n: usize) -> Result<Self> {
        let (at, value) = match kind {
            FunctionKind::IsotropicGaussian => (0.3, 1.0),
            FunctionKind::NegScaledRosenbrock => (0.25, 0.0),
        };
        if n == 0 || (kind == FunctionKind::NegScaledRosenbrock && n < 2) {
            return Err(Error::InvalidArgument(format!("{kind} is undefined for n = {n}")));
        }
        Ok(Self { kind, optimum_point: ParamVector::splat(n, at), optimum_value: value })
    }

    pub fn kind(&self) -> FunctionKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.optimum_point.dim()
    }

    pub fn optimum_point(&self) -> &ParamVector {
        &self.optimum_point
    }

    pub fn optimum_value(&self) -> f64 {
        self.optimum_value
    }

    /// Panics if `x` has the wrong dimension.
    pub fn eval(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.dim(), "point dimension");
        match self.kind {
            FunctionKind::IsotropicGaussian => isotropic_gaussian(x),
            FunctionKind::NegScaledRosenbrock => neg_scaled_rosenbrock(x).expect("n >= 2 checked at construction"),
        }
    }
}
