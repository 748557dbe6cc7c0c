//! Limited-memory BFGS with simple box constraints.
//!
//! Variables sitting on a bound whose gradient points outward are frozen for
//! the iteration; the quasi-Newton direction is computed over the remaining
//! free variables and the step is taken along the projected path with an
//! Armijo backtracking search.

use std::collections::VecDeque;

#[derive(Debug, Clone)]
pub struct Lbfgs {
    pub memory: usize,
    pub max_iterations: usize,
    /// Stop when the projected gradient's max-norm falls below this.
    pub gradient_tolerance: f64,
    /// Stop when `f_k − f_{k+1} ≤ relative_tolerance · max(|f_k|, 1)`.
    pub relative_tolerance: f64,
}

impl Default for Lbfgs {
    fn default() -> Self {
        Self {
            memory: 10,
            max_iterations: 200,
            gradient_tolerance: 1e-6,
            relative_tolerance: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    GradientConverged,
    ValueConverged,
    MaxIterations,
    LineSearchStalled,
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub gradient: Vec<f64>,
    pub iterations: usize,
    pub status: Status,
}

/// The objective was not finite at the starting point.
#[derive(Debug, Clone, PartialEq)]
pub struct NonFiniteStart;

struct Pair {
    s: Vec<f64>,
    y: Vec<f64>,
}

impl Lbfgs {
    /// Minimizes `f`, which writes its gradient into the second argument and
    /// returns the objective value.
    pub fn minimize<F>(
        &self,
        mut f: F,
        x0: &[f64],
        bounds: Option<&[(f64, f64)]>,
    ) -> Result<Minimum, NonFiniteStart>
    where
        F: FnMut(&[f64], &mut [f64]) -> f64,
    {
        let n = x0.len();
        let project = |x: &mut [f64]| {
            if let Some(b) = bounds {
                for (xi, (lo, hi)) in x.iter_mut().zip(b) {
                    *xi = xi.clamp(*lo, *hi);
                }
            }
        };

        let mut x = x0.to_vec();
        project(&mut x);
        let mut g = vec![0.0; n];
        let mut fx = f(&x, &mut g);
        if !fx.is_finite() || g.iter().any(|v| !v.is_finite()) {
            return Err(NonFiniteStart);
        }

        let mut history: VecDeque<Pair> = VecDeque::with_capacity(self.memory);
        let mut free = vec![true; n];
        let mut pg = vec![0.0; n];
        let mut d = vec![0.0; n];
        let mut xn = vec![0.0; n];
        let mut gn = vec![0.0; n];
        let mut status = Status::MaxIterations;
        let mut iterations = 0;

        while iterations < self.max_iterations {
            for i in 0..n {
                let (at_lo, at_hi) = match bounds {
                    Some(b) => (x[i] <= b[i].0 && g[i] > 0.0, x[i] >= b[i].1 && g[i] < 0.0),
                    None => (false, false),
                };
                free[i] = !(at_lo || at_hi);
                pg[i] = if free[i] { g[i] } else { 0.0 };
            }
            if max_abs(&pg) <= self.gradient_tolerance {
                status = Status::GradientConverged;
                break;
            }
            iterations += 1;

            two_loop(&history, &pg, &free, &mut d);
            let mut slope = dot(&d, &g);
            if !(slope < 0.0) {
                history.clear();
                for i in 0..n {
                    d[i] = -pg[i];
                }
                slope = dot(&d, &g);
            }

            let mut alpha = if history.is_empty() { (1.0 / norm(&d)).min(1.0) } else { 1.0 };
            let mut accepted = false;
            let mut fnew = fx;
            for _ in 0..60 {
                for i in 0..n {
                    xn[i] = x[i] + alpha * d[i];
                }
                project(&mut xn);
                let mut decrease = 0.0;
                let mut moved = false;
                for i in 0..n {
                    let step = xn[i] - x[i];
                    decrease += g[i] * step;
                    moved |= step != 0.0;
                }
                if !moved {
                    break;
                }
                fnew = f(&xn, &mut gn);
                if fnew.is_finite()
                    && gn.iter().all(|v| v.is_finite())
                    && fnew <= fx + 1e-4 * decrease.min(0.0)
                {
                    accepted = true;
                    break;
                }
                // quadratic interpolation along the unprojected ray, safeguarded
                let shrink = if fnew.is_finite() {
                    let denom = 2.0 * (fnew - fx - slope * alpha);
                    if denom > 0.0 {
                        (-slope * alpha / denom).clamp(0.1, 0.5)
                    } else {
                        0.5
                    }
                } else {
                    0.25
                };
                alpha *= shrink;
            }

            if !accepted {
                if history.is_empty() {
                    status = Status::LineSearchStalled;
                    break;
                }
                history.clear();
                continue;
            }

            let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
            let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
            let sy = dot(&s, &y);
            if sy > 1e-12 * norm(&s) * norm(&y) && sy > 0.0 {
                if history.len() == self.memory {
                    history.pop_front();
                }
                history.push_back(Pair { s, y });
            }

            let fprev = fx;
            std::mem::swap(&mut x, &mut xn);
            std::mem::swap(&mut g, &mut gn);
            fx = fnew;
            if fprev - fx <= self.relative_tolerance * fprev.abs().max(1.0) {
                status = Status::ValueConverged;
                break;
            }
        }

        Ok(Minimum { x, value: fx, gradient: g, iterations, status })
    }
}

fn two_loop(history: &VecDeque<Pair>, g: &[f64], free: &[bool], d: &mut [f64]) {
    let masked_dot = |a: &[f64], b: &[f64]| -> f64 {
        a.iter().zip(b).zip(free).filter(|(_, f)| **f).map(|((x, y), _)| x * y).sum()
    };
    let mut q: Vec<f64> = g.iter().zip(free).map(|(v, f)| if *f { *v } else { 0.0 }).collect();
    let mut alphas = Vec::with_capacity(history.len());
    for pair in history.iter().rev() {
        let sy = masked_dot(&pair.s, &pair.y);
        if sy <= 0.0 {
            alphas.push(None);
            continue;
        }
        let a = masked_dot(&pair.s, &q) / sy;
        for i in 0..q.len() {
            if free[i] {
                q[i] -= a * pair.y[i];
            }
        }
        alphas.push(Some((a, sy)));
    }
    let gamma = history
        .back()
        .map(|p| {
            let sy = masked_dot(&p.s, &p.y);
            let yy = masked_dot(&p.y, &p.y);
            if sy > 0.0 && yy > 0.0 {
                sy / yy
            } else {
                1.0
            }
        })
        .unwrap_or(1.0);
    for v in q.iter_mut() {
        *v *= gamma;
    }
    for (pair, a) in history.iter().zip(alphas.iter().rev()) {
        if let Some((a, sy)) = a {
            let b = masked_dot(&pair.y, &q) / sy;
            for i in 0..q.len() {
                if free[i] {
                    q[i] += (a - b) * pair.s[i];
                }
            }
        }
    }
    for i in 0..d.len() {
        d[i] = if free[i] { -q[i] } else { 0.0 };
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rosenbrock(x: &[f64], g: &mut [f64]) -> f64 {
        let (a, b) = (x[0], x[1]);
        g[0] = -2.0 * (1.0 - a) - 400.0 * a * (b - a * a);
        g[1] = 200.0 * (b - a * a);
        (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2)
    }

    #[test]
    fn unconstrained_rosenbrock_converges() {
        let opt = Lbfgs { max_iterations: 1000, gradient_tolerance: 1e-8, relative_tolerance: 0.0, ..Default::default() };
        let m = opt.minimize(rosenbrock, &[-1.2, 1.0], None).unwrap();
        assert_eq!(m.status, Status::GradientConverged);
        assert!((m.x[0] - 1.0).abs() < 1e-6 && (m.x[1] - 1.0).abs() < 1e-6, "{:?}", m.x);
    }

    #[test]
    fn active_bound_is_respected() {
        // minimum of (x-2)^2 + (y+1)^2 over [0,1]^2 is (1, 0)
        let f = |x: &[f64], g: &mut [f64]| {
            g[0] = 2.0 * (x[0] - 2.0);
            g[1] = 2.0 * (x[1] + 1.0);
            (x[0] - 2.0).powi(2) + (x[1] + 1.0).powi(2)
        };
        let bounds = [(0.0, 1.0), (0.0, 1.0)];
        let m = Lbfgs::default().minimize(f, &[0.3, 0.7], Some(&bounds)).unwrap();
        assert_eq!(m.x, vec![1.0, 0.0]);
        assert_eq!(m.status, Status::GradientConverged);
    }

    #[test]
    fn bounded_rosenbrock_lands_on_the_boundary() {
        let bounds = [(-2.0, 0.5), (-2.0, 2.0)];
        let opt = Lbfgs { max_iterations: 1000, gradient_tolerance: 1e-9, relative_tolerance: 0.0, ..Default::default() };
        let m = opt.minimize(rosenbrock, &[-1.2, 1.0], Some(&bounds)).unwrap();
        assert!((m.x[0] - 0.5).abs() < 1e-12);
        assert!((m.x[1] - 0.25).abs() < 1e-6, "{:?}", m.x);
    }

    #[test]
    fn non_finite_start_is_reported() {
        let f = |_: &[f64], _: &mut [f64]| f64::NAN;
        assert!(Lbfgs::default().minimize(f, &[0.0], None).is_err());
    }

    #[test]
    fn never_worse_than_start() {
        let f = |x: &[f64], g: &mut [f64]| {
            g[0] = x[0].cos();
            x[0].sin()
        };
        let m = Lbfgs::default().minimize(f, &[0.3], Some(&[(0.0, 10.0)])).unwrap();
        assert!(m.value <= 0.3f64.sin());
    }
}
