//! Two-sample Mann–Whitney U test and multiple-comparison helpers.

use seqplane_core::acquisition::std_normal_cdf;
use seqplane_core::{Error, Result};

/// Samples this small (both sides) get the exact permutation p-value; the
/// normal approximation is off by up to ~0.09 there.
pub const EXACT_LIMIT: usize = 7;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PValueMethod {
    /// Exact when both samples have at most [`EXACT_LIMIT`] values.
    Auto,
    Exact,
    /// Normal approximation with tie-corrected variance and continuity correction.
    Normal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MannWhitney {
    /// Pairs `(x ∈ a, y ∈ b)` with `x > y`, ties counting one half.
    pub u_a: f64,
    pub u_b: f64,
    pub p_two_sided: f64,
    /// Common-language effect size `U_a / (|a|·|b|)`.
    pub f: f64,
    pub exact: bool,
}

/// Midranks (1-based) of the pooled sample, in input order.
fn midranks(pooled: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..pooled.len()).collect();
    order.sort_by(|&x, &y| pooled[x].total_cmp(&pooled[y]));
    let mut ranks = vec![0.0; pooled.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && pooled[order[end]] == pooled[order[start]] {
            end += 1;
        }
        // positions start..end hold ranks start+1..=end
        let rank = (start + 1 + end) as f64 / 2.0;
        for &k in &order[start..end] {
            ranks[k] = rank;
        }
        start = end;
    }
    ranks
}

fn tie_sizes(pooled: &[f64]) -> Vec<usize> {
    let mut sorted = pooled.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut sizes = Vec::new();
    let mut k = 0;
    while k < sorted.len() {
        let mut e = k + 1;
        while e < sorted.len() && sorted[e] == sorted[k] {
            e += 1;
        }
        sizes.push(e - k);
        k = e;
    }
    sizes
}

fn normal_p(u_a: f64, na: usize, nb: usize, pooled: &[f64]) -> f64 {
    let (na, nb) = (na as f64, nb as f64);
    let n = na + nb;
    let ties: f64 = tie_sizes(pooled).into_iter().map(|t| (t * t * t - t) as f64).sum();
    let var = na * nb / 12.0 * ((n + 1.0) - ties / (n * (n - 1.0)));
    if var <= 0.0 {
        return 1.0;
    }
    let z = ((u_a - na * nb / 2.0).abs() - 0.5).max(0.0) / var.sqrt();
    (2.0 * std_normal_cdf(-z)).min(1.0)
}

/// Permutation p-value: the share of size-`na` subsets of the pooled ranks
/// whose rank sum is at least as far from its mean as the observed one.
fn exact_p(ranks: &[f64], na: usize) -> f64 {
    // doubled midranks are integers
    let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
    let max_sum: usize = doubled.iter().sum();
    let mut counts = vec![vec![0.0f64; max_sum + 1]; na + 1];
    counts[0][0] = 1.0;
    for &r in &doubled {
        for k in (1..=na).rev() {
            for s in (r..=max_sum).rev() {
                let c = counts[k - 1][s - r];
                if c != 0.0 {
                    counts[k][s] += c;
                }
            }
        }
    }
    let n = ranks.len();
    let mean2 = (na * (n + 1)) as i64;
    let observed: usize = doubled[..na].iter().sum();
    let dev = (observed as i64 - mean2).abs();
    let total: f64 = counts[na].iter().sum();
    let extreme: f64 = counts[na]
        .iter()
        .enumerate()
        .filter(|&(s, _)| (s as i64 - mean2).abs() >= dev)
        .map(|(_, c)| c)
        .sum();
    (extreme / total).min(1.0)
}

pub fn mann_whitney_u(a: &[f64], b: &[f64]) -> Result<MannWhitney> {
    mann_whitney_u_with(a, b, PValueMethod::Auto)
}

pub fn mann_whitney_u_with(a: &[f64], b: &[f64], method: PValueMethod) -> Result<MannWhitney> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidArgument("Mann-Whitney needs two nonempty samples".into()));
    }
    if a.iter().chain(b).any(|x| x.is_nan()) {
        return Err(Error::InvalidArgument("Mann-Whitney samples contain NaN".into()));
    }
    let (na, nb) = (a.len(), b.len());
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let ranks = midranks(&pooled);
    let rank_sum_a: f64 = ranks[..na].iter().sum();
    let u_a = rank_sum_a - (na * (na + 1)) as f64 / 2.0;
    let pairs = (na * nb) as f64;
    let exact = match method {
        PValueMethod::Auto => na <= EXACT_LIMIT && nb <= EXACT_LIMIT,
        PValueMethod::Exact => true,
        PValueMethod::Normal => false,
    };
    let p_two_sided = if exact { exact_p(&ranks, na) } else { normal_p(u_a, na, nb, &pooled) };
    Ok(MannWhitney { u_a, u_b: pairs - u_a, p_two_sided, f: u_a / pairs, exact })
}

/// Per-comparison significance level for `comparisons` simultaneous tests.
pub fn bonferroni_alpha(alpha: f64, comparisons: usize) -> f64 {
    assert!(comparisons > 0, "at least one comparison");
    alpha / comparisons as f64
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}
