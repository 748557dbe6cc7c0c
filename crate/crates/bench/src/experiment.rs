//! Batches of trials, CSV output and the summary comparison.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use rayon::prelude::*;
use seqplane_core::{Error, GridSpec, Result};
use serde::{Deserialize, Serialize};

use crate::functions::{FunctionKind, SyntheticFunction};
use crate::stats::{bonferroni_alpha, mann_whitney_u, mean, median, MannWhitney};
use crate::trial::{run_trial, Method, Simulation, TrialConfig};

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub methods: Vec<Method>,
    pub functions: Vec<FunctionKind>,
    pub dims: Vec<usize>,
    pub trials: usize,
    pub iterations: usize,
    pub base_seed: u64,
    pub grid: GridSpec,
    pub simulation: Simulation,
}

impl ExperimentConfig {
    pub fn new(methods: Vec<Method>, functions: Vec<FunctionKind>, dims: Vec<usize>, trials: usize, iterations: usize) -> Self {
        Self {
            methods,
            functions,
            dims,
            trials,
            iterations,
            base_seed: 0,
            grid: GridSpec::default(),
            simulation: Simulation::Grid,
        }
    }
}

/// One CSV line. A failed trial contributes its completed iterations plus a
/// row at the failing iteration with empty values and the error text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub method: Method,
    pub function: FunctionKind,
    pub dim: usize,
    pub trial: usize,
    pub seed: u64,
    pub iteration: usize,
    pub best_value: Option<f64>,
    pub optimality_gap: Option<f64>,
    pub error: String,
}

/// Runs every (method, function, dim, trial) combination, in parallel, and
/// returns rows sorted by method, function, dim, trial and iteration. Trial
/// `t` uses seed `base_seed + t`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<Row>> {
    if config.trials == 0 || config.iterations == 0 {
        return Err(Error::InvalidArgument("trials and iterations must be positive".into()));
    }
    config.grid.validate()?;
    let mut jobs = Vec::new();
    for &method in &config.methods {
        for &kind in &config.functions {
            for &dim in &config.dims {
                let function = SyntheticFunction::new(kind, dim)?;
                for trial in 0..config.trials {
                    let seed = config.base_seed.wrapping_add(trial as u64);
                    let mut tc = TrialConfig::new(method, function.clone(), config.iterations, seed);
                    tc.grid = config.grid;
                    tc.simulation = config.simulation;
                    jobs.push((trial, tc));
                }
            }
        }
    }
    jobs.sort_by_key(|(trial, tc)| (tc.method, tc.function.kind(), tc.function.dim(), *trial));

    let per_trial: Vec<Vec<Row>> = jobs
        .par_iter()
        .map(|(trial, tc)| {
            let result = run_trial(tc);
            let base = |iteration, best: Option<f64>, gap: Option<f64>, error: String| Row {
                method: tc.method,
                function: tc.function.kind(),
                dim: tc.function.dim(),
                trial: *trial,
                seed: tc.seed,
                iteration,
                best_value: best,
                optimality_gap: gap,
                error,
            };
            let mut rows: Vec<Row> = result
                .rows
                .iter()
                .map(|r| base(r.iteration, Some(r.best_value), Some(r.optimality_gap), String::new()))
                .collect();
            if let Some(fail) = result.failure {
                rows.push(base(fail.iteration, None, None, fail.message));
            }
            rows
        })
        .collect();
    Ok(per_trial.into_iter().flatten().collect())
}

fn fmt_float(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.16e}")).unwrap_or_default()
}

pub const CSV_HEADER: [&str; 9] =
    ["method", "function", "dim", "trial", "seed", "iteration", "best_value", "optimality_gap", "error"];

/// Floats are written with 17 significant digits.
pub fn write_csv<W: Write>(rows: &[Row], out: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record([
            r.method.name().to_string(),
            r.function.name().to_string(),
            r.dim.to_string(),
            r.trial.to_string(),
            r.seed.to_string(),
            r.iteration.to_string(),
            fmt_float(r.best_value),
            fmt_float(r.optimality_gap),
            r.error.clone(),
        ])?;
    }
    w.flush()
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<Row>> {
    let mut reader = csv::Reader::from_reader(input);
    reader
        .deserialize()
        .collect::<std::result::Result<Vec<Row>, _>>()
        .map_err(|e| Error::InvalidArgument(format!("benchmark CSV: {e}")))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodSummary {
    pub method: Method,
    pub gaps: Vec<f64>,
    pub mean_gap: f64,
    pub median_gap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairComparison {
    pub a: Method,
    pub b: Method,
    /// `test.f` is the probability that a gap of `a` exceeds one of `b`.
    pub test: MannWhitney,
    /// `p` multiplied by the number of comparisons, capped at 1.
    pub p_bonferroni: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub function: FunctionKind,
    pub dim: usize,
    pub iteration: usize,
    pub methods: Vec<MethodSummary>,
    pub pairs: Vec<PairComparison>,
}

/// Summarizes the gaps at `iteration` for every (function, dim) group, with
/// all pairwise tests at family-wise level `alpha`. Rows without values are
/// skipped.
pub fn compare(rows: &[Row], iteration: usize, alpha: f64) -> Result<Vec<Comparison>> {
    let mut groups: BTreeMap<(FunctionKind, usize), BTreeMap<Method, Vec<f64>>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.iteration == iteration) {
        if let Some(gap) = r.optimality_gap {
            groups.entry((r.function, r.dim)).or_default().entry(r.method).or_default().push(gap);
        }
    }
    let mut out = Vec::new();
    for ((function, dim), by_method) in groups {
        let methods: Vec<MethodSummary> = by_method
            .into_iter()
            .map(|(method, gaps)| MethodSummary { method, mean_gap: mean(&gaps), median_gap: median(&gaps), gaps })
            .collect();
        let comparisons = methods.len() * methods.len().saturating_sub(1) / 2;
        let mut pairs = Vec::new();
        for (k, a) in methods.iter().enumerate() {
            for b in &methods[k + 1..] {
                let test = mann_whitney_u(&a.gaps, &b.gaps)?;
                pairs.push(PairComparison {
                    a: a.method,
                    b: b.method,
                    p_bonferroni: (test.p_two_sided * comparisons as f64).min(1.0),
                    alpha: bonferroni_alpha(alpha, comparisons),
                    test,
                });
            }
        }
        out.push(Comparison { function, dim, iteration, methods, pairs });
    }
    Ok(out)
}

pub fn format_comparison(c: &Comparison) -> String {
    let mut s = format!("{} n={} iteration {}\n", c.function, c.dim, c.iteration);
    s += &format!("  {:<12} {:>6} {:>14} {:>14}\n", "method", "trials", "mean_gap", "median_gap");
    for m in &c.methods {
        s += &format!("  {:<12} {:>6} {:>14.6e} {:>14.6e}\n", m.method.name(), m.gaps.len(), m.mean_gap, m.median_gap);
    }
    for p in &c.pairs {
        s += &format!(
            "  {} vs {}: U={} p={:.4e} p_bonf={:.4e} f={:.3} (P[gap {} > gap {}]){}\n",
            p.a,
            p.b,
            p.test.u_a,
            p.test.p_two_sided,
            p.p_bonferroni,
            p.test.f,
            p.a,
            p.b,
            if p.test.p_two_sided < p.alpha { " significant" } else { "" }
        );
    }
    s
}
