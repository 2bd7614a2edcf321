//! External clustering metrics and correlation.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

fn check_labels(a: &[usize], b: &[usize]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch { left: a.len(), right: b.len() });
    }
    if a.len() < 2 {
        return Err(Error::EmptyInput("need at least 2 labelled items".into()));
    }
    Ok(())
}

struct PairCounts {
    /// Sum over contingency cells of C(n_ij, 2): pairs together in both.
    together_both: f64,
    /// Pairs together in the true labelling.
    together_true: f64,
    /// Pairs together in the predicted labelling.
    together_pred: f64,
    /// Total number of pairs C(n, 2).
    total: f64,
}

fn choose2(x: usize) -> f64 {
    (x as f64) * (x as f64 - 1.0) / 2.0
}

fn pair_counts(labels_true: &[usize], labels_pred: &[usize]) -> PairCounts {
    let mut cells: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut rows: BTreeMap<usize, usize> = BTreeMap::new();
    let mut cols: BTreeMap<usize, usize> = BTreeMap::new();
    for (&t, &p) in labels_true.iter().zip(labels_pred) {
        *cells.entry((t, p)).or_insert(0) += 1;
        *rows.entry(t).or_insert(0) += 1;
        *cols.entry(p).or_insert(0) += 1;
    }
    PairCounts {
        together_both: cells.values().map(|&c| choose2(c)).sum(),
        together_true: rows.values().map(|&c| choose2(c)).sum(),
        together_pred: cols.values().map(|&c| choose2(c)).sum(),
        total: choose2(labels_true.len()),
    }
}

/// Adjusted Rand index (Hubert-Arabie): `(Index - Expected) / (Max - Expected)`
/// over the pair-counting contingency table. When the denominator vanishes
/// the result is 1 for identical partitions and 0 otherwise.
pub fn ari(labels_true: &[usize], labels_pred: &[usize]) -> Result<f64> {
    check_labels(labels_true, labels_pred)?;
    let c = pair_counts(labels_true, labels_pred);
    let expected = c.together_true * c.together_pred / c.total;
    let max = 0.5 * (c.together_true + c.together_pred);
    let denom = max - expected;
    if denom == 0.0 {
        // Both partitions are all-singletons or both are a single cluster;
        // identical iff the together counts agree (0 == 0 or full == full).
        let identical = c.together_both == c.together_true && c.together_both == c.together_pred;
        return Ok(if identical { 1.0 } else { 0.0 });
    }
    Ok((c.together_both - expected) / denom)
}

/// Fowlkes-Mallows index: geometric mean of pairwise precision and recall,
/// `TP / sqrt((TP + FP) * (TP + FN))`; 0 when either marginal is empty.
pub fn fmi(labels_true: &[usize], labels_pred: &[usize]) -> Result<f64> {
    check_labels(labels_true, labels_pred)?;
    let c = pair_counts(labels_true, labels_pred);
    if c.together_true == 0.0 || c.together_pred == 0.0 {
        return Ok(0.0);
    }
    Ok(c.together_both / (c.together_pred * c.together_true).sqrt())
}

/// Sample Pearson correlation coefficient.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch { left: x.len(), right: y.len() });
    }
    if x.len() < 2 {
        return Err(Error::EmptyInput("need at least 2 samples".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        let dx = a - mx;
        let dy = b - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Degenerate("undefined correlation for constant input".into()));
    }
    Ok(sxy / (sxx * syy).sqrt())
}
