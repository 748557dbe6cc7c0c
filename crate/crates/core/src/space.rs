//! The normalized design space `[0, 1]^n` and points in it.

use serde::{Deserialize, Serialize};
use std::ops::{Deref, Index};

use crate::error::{Error, Result};

/// Unit hypercube of dimension `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchSpace {
    n: usize,
}

impl SearchSpace {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("search space dimensionality must be at least 1"));
        }
        Ok(Self { n })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn center(&self) -> ParamVector {
        ParamVector(vec![0.5; self.n])
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.n && x.iter().all(|c| (0.0..=1.0).contains(c))
    }

    pub fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: x.len() });
        }
        Ok(())
    }

    /// Validates both length and the `[0, 1]` bound.
    pub fn check(&self, x: &[f64]) -> Result<()> {
        self.check_dim(x)?;
        if let Some(c) = x.iter().find(|c| !(0.0..=1.0).contains(*c)) {
            return Err(Error::invalid(format!("coordinate {c} outside [0, 1]")));
        }
        Ok(())
    }

    pub fn clamp(&self, x: &mut [f64]) {
        for c in x {
            *c = c.clamp(0.0, 1.0);
        }
    }
}

/// A point in (or, transiently, near) the design space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParamVector(Vec<f64>);

impl ParamVector {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("parameter vector has non-finite coordinates"));
        }
        Ok(Self(coords))
    }

    pub fn splat(n: usize, value: f64) -> Self {
        Self(vec![value; n])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Max-norm distance.
    pub fn max_dist(&self, other: &ParamVector) -> f64 {
        max_dist(&self.0, &other.0)
    }
}

impl Deref for ParamVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl Index<usize> for ParamVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl From<ParamVector> for Vec<f64> {
    fn from(p: ParamVector) -> Self {
        p.0
    }
}

pub(crate) fn max_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_dimensional_space_is_rejected() {
        assert!(SearchSpace::new(0).is_err());
    }

    #[test]
    fn contains_checks_bounds_and_length() {
        let space = SearchSpace::new(2).unwrap();
        assert!(space.contains(&[0.0, 1.0]));
        assert!(!space.contains(&[0.0, 1.0 + 1e-12]));
        assert!(!space.contains(&[0.5]));
        assert!(matches!(space.check(&[0.5]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn non_finite_coordinates_are_rejected() {
        assert!(ParamVector::new(vec![0.1, f64::NAN]).is_err());
    }
}
