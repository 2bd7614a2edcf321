//! Sequence preprocessing and elastic distance measures.

use rayon::prelude::*;

use crate::error::{Error, Result};

/// A univariate value sequence (a subsequence extracted from one dimension
/// of a series). Non-empty and finite by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Sequence {
    values: Vec<f64>,
}

impl Sequence {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput("sequence must be non-empty".into()));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "non-finite value at position {pos}"
            )));
        }
        Ok(Self { values })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false // non-empty by construction
    }
}

/// Centered moving average with the window truncated to available samples at
/// the edges. The window must be odd; output length equals input length.
pub fn moving_average(seq: &Sequence, window: usize) -> Result<Sequence> {
    if window == 0 || window % 2 == 0 {
        return Err(Error::InvalidParameter(format!(
            "window must be odd and >= 1, got {window}"
        )));
    }
    let half = window / 2;
    let x = seq.as_slice();
    let n = x.len();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let lo = i.saturating_sub(half);
        let hi = (i + half).min(n - 1);
        let sum: f64 = x[lo..=hi].iter().sum();
        out.push(sum / (hi - lo + 1) as f64);
    }
    Sequence::new(out)
}

/// Right-pads every sequence with zeros to the maximum length in the list.
pub fn zero_pad(seqs: &[Sequence]) -> Result<Vec<Sequence>> {
    if seqs.is_empty() {
        return Err(Error::EmptyInput("zero_pad needs at least one sequence".into()));
    }
    let max_len = seqs.iter().map(Sequence::len).max().unwrap();
    Ok(seqs
        .iter()
        .map(|s| {
            let mut v = s.as_slice().to_vec();
            v.resize(max_len, 0.0);
            Sequence { values: v }
        })
        .collect())
}

/// Dynamic time warping distance with squared local cost; returns the square
/// root of the minimal accumulated cost over all monotone warping paths.
pub fn dtw(x: &Sequence, y: &Sequence) -> f64 {
    let a = x.as_slice();
    let b = y.as_slice();
    // Rolling two-row dynamic program over the (|a|+1) x (|b|+1) grid.
    let m = b.len();
    let mut prev = vec![f64::INFINITY; m + 1];
    let mut curr = vec![f64::INFINITY; m + 1];
    prev[0] = 0.0;
    for &av in a {
        curr[0] = f64::INFINITY;
        for j in 1..=m {
            let d = av - b[j - 1];
            let cost = d * d;
            curr[j] = cost + prev[j].min(curr[j - 1]).min(prev[j - 1]);
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    prev[m].sqrt()
}

/// DTW alignment: the accumulated-cost square root plus one optimal warping
/// path as (i, j) index pairs from (0, 0) to (|x|-1, |y|-1).
///
/// Ties during backtracking prefer the diagonal step, then the step that
/// advances `x`, so the path is deterministic.
pub fn dtw_path(x: &Sequence, y: &Sequence) -> (f64, Vec<(usize, usize)>) {
    let a = x.as_slice();
    let b = y.as_slice();
    let n = a.len();
    let m = b.len();
    let idx = |i: usize, j: usize| i * (m + 1) + j;
    let mut acc = vec![f64::INFINITY; (n + 1) * (m + 1)];
    acc[idx(0, 0)] = 0.0;
    for i in 1..=n {
        for j in 1..=m {
            let d = a[i - 1] - b[j - 1];
            let cost = d * d;
            let best = acc[idx(i - 1, j - 1)]
                .min(acc[idx(i - 1, j)])
                .min(acc[idx(i, j - 1)]);
            acc[idx(i, j)] = cost + best;
        }
    }
    let mut path = Vec::with_capacity(n + m);
    let (mut i, mut j) = (n, m);
    while i > 0 && j > 0 {
        path.push((i - 1, j - 1));
        let diag = acc[idx(i - 1, j - 1)];
        let up = acc[idx(i - 1, j)];
        let left = acc[idx(i, j - 1)];
        if diag <= up && diag <= left {
            i -= 1;
            j -= 1;
        } else if up <= left {
            i -= 1;
        } else {
            j -= 1;
        }
    }
    path.reverse();
    (acc[idx(n, m)].sqrt(), path)
}

/// Move-split-merge cost: `c` when `v <= u <= w` or `v >= u >= w`, otherwise
/// `c` plus the distance of `u` to the nearer of `v`, `w`.
#[inline]
fn msm_cost(u: f64, v: f64, w: f64, c: f64) -> f64 {
    if (v <= u && u <= w) || (v >= u && u >= w) {
        c
    } else {
        c + (u - v).abs().min((u - w).abs())
    }
}

/// Move-split-merge distance with split/merge penalty `c > 0`. A true metric
/// on sequences.
pub fn msm(x: &Sequence, y: &Sequence, c: f64) -> f64 {
    debug_assert!(c > 0.0, "msm cost parameter must be positive");
    let a = x.as_slice();
    let b = y.as_slice();
    let n = a.len();
    let m = b.len();
    let mut prev = vec![0.0f64; m];
    let mut curr = vec![0.0f64; m];
    prev[0] = (a[0] - b[0]).abs();
    for j in 1..m {
        prev[j] = prev[j - 1] + msm_cost(b[j], a[0], b[j - 1], c);
    }
    for i in 1..n {
        curr[0] = prev[0] + msm_cost(a[i], a[i - 1], b[0], c);
        for j in 1..m {
            let move_ = prev[j - 1] + (a[i] - b[j]).abs();
            let split = prev[j] + msm_cost(a[i], a[i - 1], b[j], c);
            let merge = curr[j - 1] + msm_cost(b[j], a[i], b[j - 1], c);
            curr[j] = move_.min(split).min(merge);
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    prev[m - 1]
}

/// Euclidean distance for equal-length sequences.
pub fn euclidean(x: &Sequence, y: &Sequence) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch { left: x.len(), right: y.len() });
    }
    let sum: f64 = x
        .as_slice()
        .iter()
        .zip(y.as_slice())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(sum.sqrt())
}

/// Distance measure selector for clustering and distance matrices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Measure {
    Dtw,
    Msm { cost: f64 },
    /// Euclidean distance after zero-padding all sequences to equal length.
    EuclideanPadded,
}

impl Measure {
    pub fn msm(cost: f64) -> Result<Self> {
        if !(cost > 0.0) || !cost.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "msm cost must be positive, got {cost}"
            )));
        }
        Ok(Measure::Msm { cost })
    }

    /// Distance between two sequences. For `EuclideanPadded` the caller must
    /// have padded the sequences to a common length already.
    pub(crate) fn distance(&self, x: &Sequence, y: &Sequence) -> f64 {
        match self {
            Measure::Dtw => dtw(x, y),
            Measure::Msm { cost } => msm(x, y, *cost),
            Measure::EuclideanPadded => {
                euclidean(x, y).expect("sequences must be padded to equal length")
            }
        }
    }
}

/// A symmetric pairwise distance matrix with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    /// Restriction of the matrix to a subset of indices, in the given order.
    pub fn submatrix(&self, indices: &[usize]) -> DistanceMatrix {
        let n = indices.len();
        let mut data = vec![0.0; n * n];
        for (r, &i) in indices.iter().enumerate() {
            for (c, &j) in indices.iter().enumerate() {
                data[r * n + c] = self.get(i, j);
            }
        }
        DistanceMatrix { n, data }
    }
}

/// Pairwise distances under the chosen measure; each unordered pair is
/// computed once, so the matrix is exactly symmetric.
pub fn distance_matrix(seqs: &[Sequence], measure: Measure) -> Result<DistanceMatrix> {
    if seqs.len() < 2 {
        return Err(Error::EmptyInput(format!(
            "distance matrix needs at least 2 sequences, got {}",
            seqs.len()
        )));
    }
    let padded;
    let work: &[Sequence] = if measure == Measure::EuclideanPadded {
        padded = zero_pad(seqs)?;
        &padded
    } else {
        seqs
    };
    let n = work.len();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect();
    let dists: Vec<f64> = pairs
        .par_iter()
        .map(|&(i, j)| measure.distance(&work[i], &work[j]))
        .collect();
    let mut data = vec![0.0; n * n];
    for (&(i, j), &d) in pairs.iter().zip(&dists) {
        data[i * n + j] = d;
        data[j * n + i] = d;
    }
    Ok(DistanceMatrix { n, data })
}
