//! Bradley–Terry–Luce choice likelihood.
//!
//! `P(winner | S) = exp(g_w / s) / Σ_{j ∈ S} exp(g_j / s)` where `S` is the
//! winner together with the losers.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::pref::dataset::PreferenceRecord;

/// Log-probability that the record's winner is chosen from its choice set.
pub fn btl_log_likelihood(record: &PreferenceRecord, g: &[f64], scale: f64) -> Result<f64> {
    if !(scale > 0.0) {
        return Err(Error::invalid(format!("BTL scale must be positive, got {scale}")));
    }
    if record.losers().is_empty() {
        return Err(Error::invalid("record has no losers"));
    }
    if let Some(i) = record.members().find(|&i| i >= g.len()) {
        return Err(Error::invalid(format!("index {i} out of range for {} values", g.len())));
    }
    Ok(log_prob(record, g, scale))
}

fn log_prob(record: &PreferenceRecord, g: &[f64], scale: f64) -> f64 {
    let max = record.members().map(|i| g[i]).fold(f64::NEG_INFINITY, f64::max);
    let others: f64 = record.losers().iter().map(|&i| ((g[i] - max) / scale).exp()).sum();
    log_softmax_winner(g[record.winner()], max, others, scale)
}

/// `(g_w − max)/s − ln Σ_j exp((g_j − max)/s)` given the losers' share of
/// the sum; uses `ln_1p` when the winner attains the max so near-certain
/// choices keep their tiny negative value.
fn log_softmax_winner(gw: f64, max: f64, losers_sum: f64, scale: f64) -> f64 {
    if gw == max {
        -losers_sum.ln_1p()
    } else {
        let own = ((gw - max) / scale).exp();
        (gw - max) / scale - (own + losers_sum).ln()
    }
}

/// Total log-likelihood, its gradient, and the negated Hessian `W` (positive
/// semidefinite) over all records.
pub(crate) struct Accumulated {
    pub value: f64,
    pub gradient: DVector<f64>,
    pub neg_hessian: Option<DMatrix<f64>>,
}

pub(crate) fn accumulate(
    records: &[PreferenceRecord],
    g: &[f64],
    scale: f64,
    with_hessian: bool,
) -> Accumulated {
    let n = g.len();
    let mut value = 0.0;
    let mut gradient = DVector::zeros(n);
    let mut neg_hessian = with_hessian.then(|| DMatrix::zeros(n, n));
    let mut members: Vec<usize> = Vec::new();
    let mut probs: Vec<f64> = Vec::new();
    for r in records {
        members.clear();
        members.extend(r.members());
        let max = members.iter().map(|&i| g[i]).fold(f64::NEG_INFINITY, f64::max);
        probs.clear();
        probs.extend(members.iter().map(|&i| ((g[i] - max) / scale).exp()));
        let z: f64 = probs.iter().sum();
        value += log_softmax_winner(g[r.winner()], max, probs[1..].iter().sum(), scale);
        for p in probs.iter_mut() {
            *p /= z;
        }
        // d/dg_j = (δ_jw − p_j) / s
        for (k, &i) in members.iter().enumerate() {
            gradient[i] -= probs[k] / scale;
        }
        gradient[r.winner()] += 1.0 / scale;
        if let Some(w) = neg_hessian.as_mut() {
            let s2 = scale * scale;
            for (a, &i) in members.iter().enumerate() {
                w[(i, i)] += probs[a] / s2;
                for (b, &j) in members.iter().enumerate() {
                    w[(i, j)] -= probs[a] * probs[b] / s2;
                }
            }
        }
    }
    Accumulated { value, gradient, neg_hessian }
}
