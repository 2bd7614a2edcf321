//! The Synchronized Anomaly Agreement Index.
//!
//! SAAI scores a clustering of anomalous subsequences by how often
//! temporally aligned anomalies in different dimensions end up in the same
//! cluster, regularized by the cluster count `K` and the number of
//! single-member pseudo-clusters `n_1`:
//!
//! ```text
//! SAAI = lambda * |A*_S| / |A_S| + (1 - lambda) * (K - 1 - n_1) / K
//! ```
//!
//! `A_S` is the set of synchronized cross-dimension pairs (overlap ratio at
//! least `theta`) and `A*_S` the subset whose members share a cluster.

use crate::anomaly::{AnomalyInterval, ClusteringResult, SyncPairSet};
use crate::error::{Error, Result};

/// Weight `lambda` for the main term and overlap threshold `theta`, both in
/// `[0, 1]`. Defaults to an equal weighting with `theta = 0.5`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaaiParams {
    pub lambda: f64,
    pub theta: f64,
}

impl SaaiParams {
    pub fn new(lambda: f64, theta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lambda) || !lambda.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "lambda must be in [0, 1], got {lambda}"
            )));
        }
        if !(0.0..=1.0).contains(&theta) || !theta.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "theta must be in [0, 1], got {theta}"
            )));
        }
        Ok(Self { lambda, theta })
    }

    pub fn with_lambda(self, lambda: f64) -> Result<Self> {
        Self::new(lambda, self.theta)
    }
}

impl Default for SaaiParams {
    fn default() -> Self {
        Self { lambda: 0.5, theta: 0.5 }
    }
}

/// A metric value together with a degenerate-input flag that is raised when
/// no synchronized pairs exist (the main term is then defined as 0).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaaiScore {
    pub value: f64,
    pub no_sync_pairs: bool,
}

/// Interval overlap ratio
/// `omega = (min(b_i, b_j) - max(a_i, a_j)) / (max(b_i, b_j) - min(a_i, a_j))`.
///
/// Negative for disjoint intervals and at most 1; callers compare against a
/// threshold `theta >= 0`.
pub fn overlap_ratio(a_i: usize, b_i: usize, a_j: usize, b_j: usize) -> Result<f64> {
    if a_i >= b_i || a_j >= b_j {
        return Err(Error::InvalidInterval(format!(
            "overlap ratio needs a < b, got [{a_i}, {b_i}] and [{a_j}, {b_j}]"
        )));
    }
    Ok(overlap_ratio_unchecked(a_i, b_i, a_j, b_j))
}

#[inline]
fn overlap_ratio_unchecked(a_i: usize, b_i: usize, a_j: usize, b_j: usize) -> f64 {
    let num = b_i.min(b_j) as f64 - a_i.max(a_j) as f64;
    let den = b_i.max(b_j) as f64 - a_i.min(a_j) as f64;
    num / den
}

fn check_inputs(anomalies: &[AnomalyInterval], clustering: &ClusteringResult) -> Result<()> {
    for iv in anomalies {
        if iv.a >= iv.b {
            return Err(Error::InvalidInterval(format!(
                "interval {} must satisfy a < b",
                iv.id
            )));
        }
    }
    clustering.ensure_covers(anomalies)
}

/// Enumerates synchronized pairs with a sweep over interval endpoints.
///
/// Events are sorted by time with END before START at ties, so an interval
/// that ends exactly where another starts has left the active set by the
/// time the other is examined; such endpoint-touching pairs are still tested
/// against the overlap formula (which yields 0 for them) rather than being
/// decided by active-set membership.
pub fn sync_pairs_sweepline(
    anomalies: &[AnomalyInterval],
    clustering: &ClusteringResult,
    theta: f64,
) -> Result<SyncPairSet> {
    check_inputs(anomalies, clustering)?;
    let mut out = SyncPairSet::default();
    if anomalies.is_empty() {
        return Ok(out);
    }

    const END: u8 = 0; // sorts before START at equal times
    const START: u8 = 1;
    let mut events: Vec<(usize, u8, usize)> = Vec::with_capacity(anomalies.len() * 2);
    for (idx, iv) in anomalies.iter().enumerate() {
        events.push((iv.a, START, idx));
        events.push((iv.b, END, idx));
    }
    events.sort_unstable();

    let mut active: Vec<usize> = Vec::new();
    let mut just_ended: Vec<usize> = Vec::new();
    let mut i = 0;
    while i < events.len() {
        let t = events[i].0;
        just_ended.clear();
        while i < events.len() && events[i].0 == t {
            let (_, kind, idx) = events[i];
            if kind == END {
                let pos = active.iter().position(|&x| x == idx).expect("active interval");
                active.swap_remove(pos);
                just_ended.push(idx);
            } else {
                let new = &anomalies[idx];
                for &other_idx in active.iter().chain(just_ended.iter()) {
                    let other = &anomalies[other_idx];
                    if other.dim == new.dim {
                        continue;
                    }
                    let omega = overlap_ratio_unchecked(new.a, new.b, other.a, other.b);
                    if omega >= theta {
                        let agree = clustering.cluster_of(new.id) == clustering.cluster_of(other.id);
                        out.insert(new.id, other.id, agree);
                    }
                }
                active.push(idx);
            }
            i += 1;
        }
    }
    Ok(out)
}

/// All-pairs reference: tests every cross-dimension pair directly.
pub fn sync_pairs_bruteforce(
    anomalies: &[AnomalyInterval],
    clustering: &ClusteringResult,
    theta: f64,
) -> Result<SyncPairSet> {
    check_inputs(anomalies, clustering)?;
    let mut out = SyncPairSet::default();
    for (i, p) in anomalies.iter().enumerate() {
        for q in &anomalies[i + 1..] {
            if p.dim == q.dim {
                continue;
            }
            let omega = overlap_ratio_unchecked(p.a, p.b, q.a, q.b);
            if omega >= theta {
                let agree = clustering.cluster_of(p.id) == clustering.cluster_of(q.id);
                out.insert(p.id, q.id, agree);
            }
        }
    }
    Ok(out)
}

fn main_term(
    anomalies: &[AnomalyInterval],
    clustering: &ClusteringResult,
    theta: f64,
) -> Result<(f64, bool)> {
    if anomalies.is_empty() {
        return Err(Error::EmptyInput("no anomalies to score".into()));
    }
    let pairs = sync_pairs_sweepline(anomalies, clustering, theta)?;
    if pairs.n_sync() == 0 {
        // The formula would divide by |A_S| = 0; define the term as 0 and
        // flag the score as degenerate.
        Ok((0.0, true))
    } else {
        Ok((pairs.n_agreeing() as f64 / pairs.n_sync() as f64, false))
    }
}

/// Full SAAI. The regularizer `(K - 1 - n_1) / K` is clamped at 0 so the
/// all-singleton case (`n_1 = K`) cannot push the score below 0.
pub fn saai(
    anomalies: &[AnomalyInterval],
    clustering: &ClusteringResult,
    params: &SaaiParams,
) -> Result<SaaiScore> {
    let (ratio, degenerate) = main_term(anomalies, clustering, params.theta)?;
    let k = clustering.k() as f64;
    let n1 = clustering.n_singleton() as f64;
    let penalty = ((k - 1.0 - n1) / k).max(0.0);
    Ok(SaaiScore {
        value: params.lambda * ratio + (1.0 - params.lambda) * penalty,
        no_sync_pairs: degenerate,
    })
}

/// Ablation variant with only the cluster-count penalty `(K - 1) / K`.
pub fn saai_p1(
    anomalies: &[AnomalyInterval],
    clustering: &ClusteringResult,
    params: &SaaiParams,
) -> Result<SaaiScore> {
    let (ratio, degenerate) = main_term(anomalies, clustering, params.theta)?;
    let k = clustering.k() as f64;
    let penalty = (k - 1.0) / k;
    Ok(SaaiScore {
        value: params.lambda * ratio + (1.0 - params.lambda) * penalty,
        no_sync_pairs: degenerate,
    })
}

/// Ablation variant with only the pseudo-cluster penalty `(K - n_1) / K`.
pub fn saai_p2(
    anomalies: &[AnomalyInterval],
    clustering: &ClusteringResult,
    params: &SaaiParams,
) -> Result<SaaiScore> {
    let (ratio, degenerate) = main_term(anomalies, clustering, params.theta)?;
    let k = clustering.k() as f64;
    let n1 = clustering.n_singleton() as f64;
    let penalty = (k - n1) / k;
    Ok(SaaiScore {
        value: params.lambda * ratio + (1.0 - params.lambda) * penalty,
        no_sync_pairs: degenerate,
    })
}
