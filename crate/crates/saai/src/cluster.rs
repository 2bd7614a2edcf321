//! Elastic k-means, DBA centroids, silhouette and X-Means.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::elastic::{distance_matrix, dtw_path, zero_pad, DistanceMatrix, Measure, Sequence};
use crate::error::{Error, Result};
use crate::rng::derive_seed;

/// Configuration for elastic k-means.
///
/// Defaults follow the settings used throughout the experiment harness:
/// 50 Lloyd iterations at most, 3 restarts, 10 DBA refinement passes and
/// assignment-stability stopping (`tol = 0`).
#[derive(Debug, Clone, PartialEq)]
pub struct KMeansConfig {
    pub k: usize,
    pub max_iter: usize,
    pub n_init: usize,
    pub dba_iter: usize,
    pub tol: f64,
    pub seed: u64,
}

impl KMeansConfig {
    pub fn new(k: usize, seed: u64) -> Self {
        Self { k, max_iter: 50, n_init: 1, dba_iter: 10, tol: 0.0, seed }
    }

    fn validate(&self) -> Result<()> {
        if self.k == 0 || self.max_iter == 0 || self.n_init == 0 || self.dba_iter == 0 {
            return Err(Error::InvalidParameter(
                "k, max_iter, n_init and dba_iter must all be positive".into(),
            ));
        }
        if !(self.tol >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "tol must be >= 0, got {}",
                self.tol
            )));
        }
        Ok(())
    }
}

/// Result of one k-means fit.
#[derive(Debug, Clone)]
pub struct KMeansFit {
    pub labels: Vec<usize>,
    pub centroids: Vec<Sequence>,
    /// Sum of squared member-to-centroid distances.
    pub inertia: f64,
    pub n_iter: usize,
    /// Inertia after each assignment step of the winning restart.
    pub inertia_history: Vec<f64>,
}

/// Result of an X-Means run.
#[derive(Debug, Clone)]
pub struct XMeansFit {
    pub labels: Vec<usize>,
    pub k: usize,
    /// True when the search never left `k_min`; the true cluster count may
    /// lie below the floor.
    pub at_k_min: bool,
}

// A centroid is either one of the input sequences (medoid-style measures and
// freshly reseeded clusters) or a free sequence produced by averaging.
#[derive(Debug, Clone)]
enum Centroid {
    Member(usize),
    Free(Sequence),
}

struct Engine<'a> {
    work: &'a [Sequence],
    measure: Measure,
    matrix: Option<&'a DistanceMatrix>,
}

impl<'a> Engine<'a> {
    fn member_dist(&self, i: usize, j: usize) -> f64 {
        match self.matrix {
            Some(m) => m.get(i, j),
            None => self.measure.distance(&self.work[i], &self.work[j]),
        }
    }

    fn dist(&self, i: usize, c: &Centroid) -> f64 {
        match c {
            Centroid::Member(j) => self.member_dist(i, *j),
            Centroid::Free(s) => self.measure.distance(&self.work[i], s),
        }
    }

    fn materialize(&self, c: &Centroid) -> Sequence {
        match c {
            Centroid::Member(j) => self.work[*j].clone(),
            Centroid::Free(s) => s.clone(),
        }
    }
}

/// k-means++ seeding: the first centroid is drawn uniformly, each subsequent
/// one with probability proportional to the squared distance to the nearest
/// already-chosen centroid. Returns `k` distinct indices.
pub fn kmeanspp_init(seqs: &[Sequence], k: usize, measure: Measure, seed: u64) -> Result<Vec<usize>> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be >= 1".into()));
    }
    if k > seqs.len() {
        return Err(Error::InvalidParameter(format!(
            "k = {k} exceeds number of sequences {}",
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
    let engine = Engine { work, measure, matrix: None };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(kmeanspp_core(&engine, work.len(), k, &mut rng))
}

fn kmeanspp_core(engine: &Engine, n: usize, k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let first = rng.random_range(0..n);
    let mut chosen = vec![first];
    let mut d2: Vec<f64> = (0..n)
        .map(|i| engine.member_dist(i, first).powi(2))
        .collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut r = rng.random::<f64>() * total;
            let mut pick = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                if r < w {
                    pick = i;
                    break;
                }
                r -= w;
            }
            pick
        } else {
            // All remaining mass is on duplicates of chosen points; fall back
            // to a uniform draw over the unchosen indices so the result still
            // has k distinct members.
            let unchosen: Vec<usize> = (0..n).filter(|i| !chosen.contains(i)).collect();
            unchosen[rng.random_range(0..unchosen.len())]
        };
        chosen.push(next);
        for i in 0..n {
            let d = engine.member_dist(i, next).powi(2);
            if d < d2[i] {
                d2[i] = d;
            }
        }
    }
    chosen
}

fn assign(engine: &Engine, n: usize, centroids: &[Centroid]) -> Vec<usize> {
    (0..n)
        .map(|i| {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (j, c) in centroids.iter().enumerate() {
                let d = engine.dist(i, c);
                if d < best_d {
                    best_d = d;
                    best = j;
                }
            }
            best
        })
        .collect()
}

/// Reseeds every empty cluster with the point farthest from its current
/// centroid, keeping k stable.
fn repair_empty(engine: &Engine, centroids: &mut [Centroid], labels: &mut [usize]) {
    let k = centroids.len();
    loop {
        let mut sizes = vec![0usize; k];
        for &l in labels.iter() {
            sizes[l] += 1;
        }
        let Some(empty) = sizes.iter().position(|&s| s == 0) else { break };
        let mut worst = usize::MAX;
        let mut worst_d = -1.0;
        for (i, &l) in labels.iter().enumerate() {
            if sizes[l] <= 1 {
                continue; // do not empty another cluster
            }
            let d = engine.dist(i, &centroids[l]);
            if d > worst_d {
                worst_d = d;
                worst = i;
            }
        }
        if worst == usize::MAX {
            break;
        }
        centroids[empty] = Centroid::Member(worst);
        labels[worst] = empty;
    }
}

fn update_centroids(
    engine: &Engine,
    labels: &[usize],
    centroids: &mut Vec<Centroid>,
    dba_iter: usize,
) {
    let k = centroids.len();
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (i, &l) in labels.iter().enumerate() {
        members[l].push(i);
    }
    for (j, m) in members.iter().enumerate() {
        if m.is_empty() {
            continue; // repaired after the next assignment
        }
        centroids[j] = match engine.measure {
            Measure::Dtw => {
                let init = engine.materialize(&centroids[j]);
                let seqs: Vec<Sequence> = m.iter().map(|&i| engine.work[i].clone()).collect();
                Centroid::Free(dba(&seqs, &init, dba_iter).expect("non-empty members"))
            }
            Measure::Msm { .. } => Centroid::Member(medoid(engine, m)),
            Measure::EuclideanPadded => Centroid::Free(mean_sequence(engine.work, m)),
        };
    }
}

fn medoid(engine: &Engine, members: &[usize]) -> usize {
    let mut best = members[0];
    let mut best_sum = f64::INFINITY;
    for &i in members {
        let sum: f64 = members.iter().map(|&j| engine.member_dist(i, j)).sum();
        if sum < best_sum {
            best_sum = sum;
            best = i;
        }
    }
    best
}

fn mean_sequence(work: &[Sequence], members: &[usize]) -> Sequence {
    let len = work[members[0]].len();
    let mut sums = vec![0.0; len];
    for &i in members {
        for (s, v) in sums.iter_mut().zip(work[i].as_slice()) {
            *s += v;
        }
    }
    let n = members.len() as f64;
    Sequence::new(sums.into_iter().map(|s| s / n).collect()).expect("finite mean")
}

fn inertia_of(engine: &Engine, labels: &[usize], centroids: &[Centroid]) -> f64 {
    labels
        .iter()
        .enumerate()
        .map(|(i, &l)| engine.dist(i, &centroids[l]).powi(2))
        .sum()
}

/// Lloyd iterations over elastic distances: assignments to the nearest
/// centroid, centroid updates by DBA (DTW), medoid (MSM) or the pointwise
/// mean (padded Euclidean), best of `n_init` restarts by inertia.
pub fn kmeans_elastic(seqs: &[Sequence], config: &KMeansConfig, measure: Measure) -> Result<KMeansFit> {
    let matrix = if seqs.len() >= 2 {
        Some(distance_matrix(seqs, measure)?)
    } else {
        None
    };
    kmeans_elastic_impl(seqs, config, measure, matrix.as_ref())
}

/// As [`kmeans_elastic`] with a caller-provided member distance matrix
/// (used to share one matrix across a whole k sweep).
pub(crate) fn kmeans_elastic_impl(
    seqs: &[Sequence],
    config: &KMeansConfig,
    measure: Measure,
    matrix: Option<&DistanceMatrix>,
) -> Result<KMeansFit> {
    config.validate()?;
    if seqs.is_empty() {
        return Err(Error::EmptyInput("kmeans needs at least one sequence".into()));
    }
    if config.k > seqs.len() {
        return Err(Error::InvalidParameter(format!(
            "k = {} exceeds number of sequences {}",
            config.k,
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
    let engine = Engine { work, measure, matrix };
    let n = work.len();

    let mut best: Option<KMeansFit> = None;
    for restart in 0..config.n_init {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, &[restart as u64]));
        let init = kmeanspp_core(&engine, n, config.k, &mut rng);
        let mut centroids: Vec<Centroid> = init.iter().map(|&i| Centroid::Member(i)).collect();
        let mut labels = assign(&engine, n, &centroids);
        repair_empty(&engine, &mut centroids, &mut labels);
        let mut history = vec![inertia_of(&engine, &labels, &centroids)];
        let mut n_iter = 0;
        for _ in 0..config.max_iter {
            n_iter += 1;
            update_centroids(&engine, &labels, &mut centroids, config.dba_iter);
            let mut new_labels = assign(&engine, n, &centroids);
            repair_empty(&engine, &mut centroids, &mut new_labels);
            let inertia = inertia_of(&engine, &new_labels, &centroids);
            let prev = *history.last().unwrap();
            history.push(inertia);
            let stable = new_labels == labels;
            labels = new_labels;
            if stable || (config.tol > 0.0 && prev - inertia <= config.tol) {
                break;
            }
        }
        let inertia = *history.last().unwrap();
        let fit = KMeansFit {
            labels,
            centroids: centroids.iter().map(|c| engine.materialize(c)).collect(),
            inertia,
            n_iter,
            inertia_history: history,
        };
        let better = match &best {
            None => true,
            Some(b) => fit.inertia < b.inertia,
        };
        if better {
            best = Some(fit);
        }
    }
    Ok(best.expect("n_init >= 1"))
}

// Lloyd refinement from a given labelling; used by X-Means after splits.
fn refine_from_labels(
    engine: &Engine,
    labels: &[usize],
    k: usize,
    max_iter: usize,
    dba_iter: usize,
) -> (Vec<usize>, Vec<Centroid>) {
    let n = labels.len();
    let mut centroids: Vec<Centroid> = Vec::with_capacity(k);
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (i, &l) in labels.iter().enumerate() {
        members[l].push(i);
    }
    for m in &members {
        // Seed each cluster with its first member, then let the update step
        // produce the proper centroid.
        centroids.push(Centroid::Member(*m.first().unwrap_or(&0)));
    }
    let mut labels = labels.to_vec();
    for _ in 0..max_iter {
        update_centroids(engine, &labels, &mut centroids, dba_iter);
        let mut new_labels = assign(engine, n, &centroids);
        repair_empty(engine, &mut centroids, &mut new_labels);
        let stable = new_labels == labels;
        labels = new_labels;
        if stable {
            break;
        }
    }
    (labels, centroids)
}

/// DTW barycenter averaging: repeatedly aligns all members to the current
/// average and re-averages the values aligned to each position. The output
/// has the same length as `init`; the summed squared DTW cost to the members
/// is non-increasing over iterations.
pub fn dba(members: &[Sequence], init: &Sequence, iters: usize) -> Result<Sequence> {
    if members.is_empty() {
        return Err(Error::EmptyInput("dba needs at least one member".into()));
    }
    let len = init.len();
    let mut centroid = init.clone();
    for _ in 0..iters {
        let mut sums = vec![0.0; len];
        let mut counts = vec![0usize; len];
        for m in members {
            let (_, path) = dtw_path(&centroid, m);
            for (ci, mi) in path {
                sums[ci] += m.as_slice()[mi];
                counts[ci] += 1;
            }
        }
        let new = Sequence::new(
            sums.iter()
                .zip(&counts)
                .map(|(s, &c)| s / c as f64)
                .collect(),
        )?;
        if new == centroid {
            break;
        }
        centroid = new;
    }
    Ok(centroid)
}

/// Mean silhouette over all points from a precomputed distance matrix.
/// Singleton clusters contribute 0; errors when fewer than two clusters are
/// present.
pub fn silhouette(dist: &DistanceMatrix, labels: &[usize]) -> Result<f64> {
    let n = dist.len();
    if labels.len() != n {
        return Err(Error::LengthMismatch { left: labels.len(), right: n });
    }
    let mut cluster_ids: Vec<usize> = labels.to_vec();
    cluster_ids.sort_unstable();
    cluster_ids.dedup();
    if cluster_ids.len() < 2 {
        return Err(Error::Degenerate("silhouette undefined for K=1".into()));
    }
    let index_of = |label: usize| cluster_ids.binary_search(&label).unwrap();
    let mut sizes = vec![0usize; cluster_ids.len()];
    for &l in labels {
        sizes[index_of(l)] += 1;
    }
    let mut total = 0.0;
    for i in 0..n {
        let own = index_of(labels[i]);
        if sizes[own] == 1 {
            continue; // singleton: s(i) = 0
        }
        let mut sums = vec![0.0; cluster_ids.len()];
        for j in 0..n {
            if j != i {
                sums[index_of(labels[j])] += dist.get(i, j);
            }
        }
        let a = sums[own] / (sizes[own] - 1) as f64;
        let b = sums
            .iter()
            .enumerate()
            .filter(|&(c, _)| c != own && sizes[c] > 0)
            .map(|(c, s)| s / sizes[c] as f64)
            .fold(f64::INFINITY, f64::min);
        let denom = a.max(b);
        if denom > 0.0 {
            total += (b - a) / denom;
        }
    }
    Ok(total / n as f64)
}

// Bayesian information criterion of a clustering, modelled as spherical
// Gaussians in the elastic-distance space: per-cluster variance estimated
// from the squared member-to-centroid distances, two free parameters per
// cluster (position proxy and variance). At the variance MLE the data term
// collapses to r/2 per cluster.
fn bic_distance_model(cluster_sq_dists: &[Vec<f64>]) -> f64 {
    let k = cluster_sq_dists.len();
    let n: usize = cluster_sq_dists.iter().map(Vec::len).sum();
    let nf = n as f64;
    let mut ll = 0.0;
    for c in cluster_sq_dists {
        if c.is_empty() {
            continue;
        }
        let r = c.len() as f64;
        let sum_c: f64 = c.iter().sum();
        let var = (sum_c / r).max(1e-10);
        ll += r * (r.ln() - nf.ln())
            - r / 2.0 * (2.0 * std::f64::consts::PI * var).ln()
            - r / 2.0;
    }
    let p = 2.0 * k as f64;
    ll - p / 2.0 * nf.ln()
}

const XMEANS_MIN_SPLIT: usize = 3;

/// X-Means: starts at `k_min` clusters and repeatedly attempts to split each
/// cluster with a local 2-means, keeping a split exactly when it improves
/// the BIC of that cluster's points; stops when no split is accepted or
/// `k_max` is reached.
pub fn xmeans(
    seqs: &[Sequence],
    k_min: usize,
    k_max: usize,
    measure: Measure,
    seed: u64,
) -> Result<XMeansFit> {
    if k_min < 2 {
        return Err(Error::InvalidParameter(format!("k_min must be >= 2, got {k_min}")));
    }
    if k_max < k_min || k_max > seqs.len() {
        return Err(Error::InvalidParameter(format!(
            "need k_min <= k_max <= n, got k_min={k_min}, k_max={k_max}, n={}",
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
    let matrix = distance_matrix(work, measure)?;
    let engine = Engine { work, measure, matrix: Some(&matrix) };

    let base_cfg = KMeansConfig::new(k_min, derive_seed(seed, &[0]));
    let fit = kmeans_elastic_impl(work, &base_cfg, measure, Some(&matrix))?;
    let mut labels = fit.labels;
    let mut k = k_min;
    // Dense centroid list aligned with labels 0..k.
    let (l, mut centroids) = refine_from_labels(&engine, &labels, k, 1, base_cfg.dba_iter);
    labels = l;

    for round in 0..k_max {
        let mut accepted: Vec<(usize, Vec<usize>, Vec<usize>)> = Vec::new();
        for j in 0..k {
            if k + accepted.len() >= k_max {
                break;
            }
            let members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == j).collect();
            if members.len() < XMEANS_MIN_SPLIT {
                continue;
            }
            let subset: Vec<Sequence> = members.iter().map(|&i| work[i].clone()).collect();
            let sub_matrix = matrix.submatrix(&members);
            let mut split_cfg =
                KMeansConfig::new(2, derive_seed(seed, &[1, round as u64, j as u64]));
            split_cfg.n_init = 2;
            let split = kmeans_elastic_impl(&subset, &split_cfg, measure, Some(&sub_matrix))?;

            let parent_sq: Vec<f64> = members
                .iter()
                .map(|&i| engine.dist(i, &centroids[j]).powi(2))
                .collect();
            let mut child_sq: Vec<Vec<f64>> = vec![Vec::new(), Vec::new()];
            for (local, &global) in members.iter().enumerate() {
                let child = split.labels[local];
                let d = measure.distance(&work[global], &split.centroids[child]);
                child_sq[child].push(d * d);
            }
            // Require both children to carry at least two members so the
            // per-cluster variance estimate stays meaningful.
            if child_sq.iter().any(|c| c.len() < 2) {
                continue;
            }
            let bic_parent = bic_distance_model(std::slice::from_ref(&parent_sq));
            let bic_split = bic_distance_model(&child_sq);
            if bic_split > bic_parent {
                let half: Vec<usize> = members
                    .iter()
                    .enumerate()
                    .filter(|&(local, _)| split.labels[local] == 1)
                    .map(|(_, &g)| g)
                    .collect();
                accepted.push((j, members, half));
            }
        }
        if accepted.is_empty() {
            break;
        }
        for (_, _, half) in &accepted {
            for &i in half {
                labels[i] = k;
            }
            k += 1;
        }
        let (l, c) = refine_from_labels(&engine, &labels, k, base_cfg.max_iter, base_cfg.dba_iter);
        labels = l;
        centroids = c;
        // Refinement may empty a label only through repair, which keeps k.
        let _ = round;
    }

    Ok(XMeansFit { labels, k, at_k_min: k == k_min })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extmetrics::ari;

    fn seq(v: &[f64]) -> Sequence {
        Sequence::new(v.to_vec()).unwrap()
    }

    fn blob(center: f64, len: usize, count: usize, spread: f64) -> Vec<Sequence> {
        (0..count)
            .map(|i| {
                let offset = spread * (i as f64 - (count - 1) as f64 / 2.0);
                seq(&vec![center + offset; len])
            })
            .collect()
    }

    #[test]
    fn kmeanspp_k_equals_n_returns_distinct_indices() {
        // With duplicates present the fallback draw must still return
        // distinct indices.
        let seqs = vec![seq(&[0.0, 0.0]), seq(&[0.0, 0.0]), seq(&[5.0, 5.0]), seq(&[9.0, 1.0])];
        let mut idx = kmeanspp_init(&seqs, 4, Measure::Dtw, 3).unwrap();
        idx.sort_unstable();
        assert_eq!(idx, vec![0, 1, 2, 3]);
        assert!(kmeanspp_init(&seqs, 5, Measure::Dtw, 3).is_err());
    }

    #[test]
    fn kmeanspp_k1_is_reproducible() {
        let seqs = blob(0.0, 3, 6, 0.1);
        let a = kmeanspp_init(&seqs, 1, Measure::Dtw, 99).unwrap();
        let b = kmeanspp_init(&seqs, 1, Measure::Dtw, 99).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 1);
    }

    #[test]
    fn kmeanspp_puts_one_centroid_per_far_blob() {
        // Two tight blobs 100 apart: the squared-distance weighting makes a
        // cross-blob second pick overwhelmingly likely.
        let mut seqs = blob(0.0, 4, 3, 0.1);
        seqs.extend(blob(100.0, 4, 3, 0.1));
        let mut hits = 0;
        for s in 0..1000 {
            let idx = kmeanspp_init(&seqs, 2, Measure::Dtw, s).unwrap();
            let sides: Vec<bool> = idx.iter().map(|&i| i >= 3).collect();
            if sides[0] != sides[1] {
                hits += 1;
            }
        }
        assert!(hits >= 990, "only {hits}/1000 seedings split the blobs");
    }

    #[test]
    fn kmeans_k1_groups_everything() {
        let seqs = blob(0.0, 5, 4, 1.0);
        let fit = kmeans_elastic(&seqs, &KMeansConfig::new(1, 7), Measure::Dtw).unwrap();
        assert!(fit.labels.iter().all(|&l| l == 0));
    }

    #[test]
    fn kmeans_exact_groups_have_zero_inertia() {
        let mut seqs = Vec::new();
        for c in [0.0, 10.0, 20.0] {
            for _ in 0..3 {
                seqs.push(seq(&[c, c + 1.0, c]));
            }
        }
        let fit = kmeans_elastic(&seqs, &KMeansConfig::new(3, 42), Measure::Dtw).unwrap();
        assert!(fit.inertia < 1e-18, "inertia {}", fit.inertia);
        for g in 0..3 {
            let l = fit.labels[g * 3];
            assert!(fit.labels[g * 3..g * 3 + 3].iter().all(|&x| x == l));
        }
    }

    /// Two shape classes mimicking a long positive bump and a short negative
    /// bump; k-means with DTW must recover the class partition.
    fn two_shape_classes() -> (Vec<Sequence>, Vec<usize>) {
        let mut seqs = Vec::new();
        let mut truth = Vec::new();
        for rep in 0..10 {
            let jitter = rep as f64 * 0.05;
            let long: Vec<f64> = (0..40)
                .map(|t| 30.0 + jitter + 10.0 * (std::f64::consts::PI * t as f64 / 39.0).sin())
                .collect();
            seqs.push(seq(&long));
            truth.push(0);
        }
        for rep in 0..10 {
            let jitter = rep as f64 * 0.05;
            let short: Vec<f64> = (0..12)
                .map(|t| 20.0 - jitter - 5.0 * (std::f64::consts::PI * t as f64 / 11.0).sin())
                .collect();
            seqs.push(seq(&short));
            truth.push(1);
        }
        (seqs, truth)
    }

    #[test]
    fn kmeans_recovers_two_shape_classes() {
        let (seqs, truth) = two_shape_classes();
        let fit = kmeans_elastic(&seqs, &KMeansConfig::new(2, 5), Measure::Dtw).unwrap();
        assert_eq!(ari(&truth, &fit.labels).unwrap(), 1.0);

        // Oracle: enumerate all 2-partitions of the 20 members and verify the
        // class partition minimizes medoid inertia, so the clustering target
        // is actually the partition asserted above.
        let matrix = distance_matrix(&seqs, Measure::Dtw).unwrap();
        let inertia_of_mask = |mask: u32| -> f64 {
            let mut best = 0.0;
            for side in 0..2 {
                let members: Vec<usize> = (0..20)
                    .filter(|&i| ((mask >> i) & 1) as usize == side)
                    .collect();
                if members.is_empty() {
                    return f64::INFINITY;
                }
                let side_best = members
                    .iter()
                    .map(|&c| -> f64 {
                        members.iter().map(|&i| matrix.get(i, c).powi(2)).sum()
                    })
                    .fold(f64::INFINITY, f64::min);
                best += side_best;
            }
            best
        };
        let class_mask: u32 = (10..20).map(|i| 1u32 << i).sum();
        let class_inertia = inertia_of_mask(class_mask);
        for mask in 1..(1u32 << 19) {
            // fix member 19's side to halve the search space
            let full = mask | (1 << 19);
            assert!(
                inertia_of_mask(full) >= class_inertia - 1e-9,
                "partition {full:b} beats the class partition"
            );
        }
    }

    #[test]
    fn kmeans_inertia_history_non_increasing() {
        let (seqs, _) = two_shape_classes();
        for k in [2, 3, 4] {
            let fit = kmeans_elastic(&seqs, &KMeansConfig::new(k, 11), Measure::Dtw).unwrap();
            for w in fit.inertia_history.windows(2) {
                assert!(
                    w[1] <= w[0] + 1e-9,
                    "inertia increased: {} -> {} (k={k})",
                    w[0],
                    w[1]
                );
            }
        }
    }

    #[test]
    fn kmeans_is_deterministic() {
        let (seqs, _) = two_shape_classes();
        let cfg = KMeansConfig::new(3, 123);
        let a = kmeans_elastic(&seqs, &cfg, Measure::Dtw).unwrap();
        let b = kmeans_elastic(&seqs, &cfg, Measure::Dtw).unwrap();
        assert_eq!(a.labels, b.labels);
        assert_eq!(a.inertia.to_bits(), b.inertia.to_bits());
        for (x, y) in a.centroids.iter().zip(&b.centroids) {
            assert_eq!(x, y);
        }
    }

    #[test]
    fn kmeans_msm_uses_member_centroids() {
        let (seqs, truth) = two_shape_classes();
        let fit =
            kmeans_elastic(&seqs, &KMeansConfig::new(2, 9), Measure::Msm { cost: 1.0 }).unwrap();
        assert_eq!(ari(&truth, &fit.labels).unwrap(), 1.0);
        for c in &fit.centroids {
            assert!(seqs.iter().any(|s| s == c), "centroid is not a member");
        }
    }

    #[test]
    fn kmeans_empty_input_is_an_error() {
        assert!(kmeans_elastic(&[], &KMeansConfig::new(1, 0), Measure::Dtw).is_err());
    }

    #[test]
    fn dba_examples() {
        let m = seq(&[1.0, 2.0, 3.0]);
        assert_eq!(dba(&[m.clone()], &m, 10).unwrap(), m);

        let members = vec![seq(&[4.0, 4.0]), seq(&[4.0, 4.0]), seq(&[4.0, 4.0])];
        assert_eq!(dba(&members, &members[0], 5).unwrap(), members[0]);

        let members = vec![seq(&[0.0, 0.0, 0.0]), seq(&[2.0, 2.0, 2.0])];
        let avg = dba(&members, &members[0], 10).unwrap();
        assert_eq!(avg.as_slice(), &[1.0, 1.0, 1.0]);

        assert!(dba(&[], &m, 3).is_err());
    }

    #[test]
    fn dba_cost_non_increasing() {
        let members = vec![
            seq(&[0.0, 1.0, 5.0, 1.0, 0.0]),
            seq(&[0.0, 4.0, 4.0, 0.0]),
            seq(&[1.0, 1.0, 6.0, 2.0, 0.0, 0.0]),
        ];
        let cost = |c: &Sequence| -> f64 {
            members.iter().map(|m| crate::elastic::dtw(c, m).powi(2)).sum()
        };
        let mut centroid = members[0].clone();
        let mut prev = cost(&centroid);
        for _ in 0..8 {
            centroid = dba(&members, &centroid, 1).unwrap();
            let now = cost(&centroid);
            assert!(now <= prev + 1e-9, "dba cost increased: {prev} -> {now}");
            prev = now;
        }
    }

    #[test]
    fn silhouette_two_tight_far_pairs() {
        // Closed form from the four pairwise distances: a(i) = 1,
        // b(i) = (100 + 101) / 2 or (99 + 100) / 2.
        let seqs = vec![seq(&[0.0]), seq(&[1.0]), seq(&[100.0]), seq(&[101.0])];
        let m = distance_matrix(&seqs, Measure::EuclideanPadded).unwrap();
        let s = silhouette(&m, &[0, 0, 1, 1]).unwrap();
        let expect = ((100.5 - 1.0) / 100.5 + (99.5 - 1.0) / 99.5) / 2.0;
        assert!((s - expect).abs() < 1e-12);
        assert!(s > 0.95);
    }

    #[test]
    fn silhouette_identical_points_score_zero() {
        let seqs = vec![seq(&[2.0]); 6];
        let m = distance_matrix(&seqs, Measure::EuclideanPadded).unwrap();
        let s = silhouette(&m, &[0, 1, 0, 1, 0, 1]).unwrap();
        assert_eq!(s, 0.0);
    }

    #[test]
    fn silhouette_prefers_true_partition() {
        let seqs = vec![
            seq(&[0.0]),
            seq(&[0.5]),
            seq(&[1.0]),
            seq(&[1.5]),
            seq(&[50.0]),
            seq(&[50.5]),
            seq(&[51.0]),
            seq(&[51.5]),
        ];
        let m = distance_matrix(&seqs, Measure::EuclideanPadded).unwrap();
        let good = silhouette(&m, &[0, 0, 0, 0, 1, 1, 1, 1]).unwrap();
        let bad = silhouette(&m, &[0, 1, 0, 1, 0, 1, 0, 1]).unwrap();
        assert!(good > bad, "good {good} <= bad {bad}");
    }

    #[test]
    fn silhouette_rejects_single_cluster() {
        let seqs = vec![seq(&[0.0]), seq(&[1.0])];
        let m = distance_matrix(&seqs, Measure::EuclideanPadded).unwrap();
        let err = silhouette(&m, &[3, 3]).unwrap_err();
        assert!(err.to_string().contains("K=1"), "{err}");
    }

    #[test]
    fn silhouette_label_permutation_invariant() {
        let (seqs, _) = two_shape_classes();
        let m = distance_matrix(&seqs, Measure::Dtw).unwrap();
        let labels: Vec<usize> = (0..20).map(|i| i % 3).collect();
        let renamed: Vec<usize> = labels.iter().map(|l| (l * 11 + 5) % 97).collect();
        let a = silhouette(&m, &labels).unwrap();
        let b = silhouette(&m, &renamed).unwrap();
        assert_eq!(a, b);
    }

    fn four_shape_classes() -> (Vec<Sequence>, Vec<usize>) {
        let mut seqs = Vec::new();
        let mut truth = Vec::new();
        let shapes: [(f64, f64, usize); 4] =
            [(30.0, 10.0, 40), (30.0, -8.0, 40), (20.0, 5.0, 12), (20.0, -5.0, 12)];
        for (class, &(base, amp, len)) in shapes.iter().enumerate() {
            for rep in 0..5 {
                let jitter = rep as f64 * 0.08;
                let v: Vec<f64> = (0..len)
                    .map(|t| {
                        base + jitter
                            + amp * (std::f64::consts::PI * t as f64 / (len - 1) as f64).sin()
                    })
                    .collect();
                seqs.push(seq(&v));
                truth.push(class);
            }
        }
        (seqs, truth)
    }

    #[test]
    fn xmeans_finds_four_classes() {
        let (seqs, truth) = four_shape_classes();
        let fit = xmeans(&seqs, 2, 10, Measure::Msm { cost: 1.0 }, 17).unwrap();
        assert_eq!(fit.k, 4, "labels: {:?}", fit.labels);
        assert!(!fit.at_k_min);
        assert_eq!(ari(&truth, &fit.labels).unwrap(), 1.0);
    }

    #[test]
    fn xmeans_respects_floor_and_ceiling() {
        // One tight cluster: cannot go below k_min, flagged.
        let seqs = blob(5.0, 6, 8, 0.01);
        let fit = xmeans(&seqs, 2, 8, Measure::Msm { cost: 1.0 }, 3).unwrap();
        assert_eq!(fit.k, 2);
        assert!(fit.at_k_min);

        // Four classes but k_max = 2.
        let (seqs, _) = four_shape_classes();
        let fit = xmeans(&seqs, 2, 2, Measure::Msm { cost: 1.0 }, 3).unwrap();
        assert_eq!(fit.k, 2);

        assert!(xmeans(&seqs, 1, 5, Measure::Dtw, 0).is_err());
        assert!(xmeans(&seqs, 2, 100, Measure::Dtw, 0).is_err());
    }

    #[test]
    fn xmeans_k_within_bounds_on_noisy_input() {
        let mut state = 0x12345u64;
        let mut next = move || {
            state = crate::rng::splitmix64(state);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        let seqs: Vec<Sequence> = (0..24)
            .map(|_| {
                let len = 8 + (next() * 20.0) as usize;
                seq(&(0..len).map(|_| next() * 10.0).collect::<Vec<_>>())
            })
            .collect();
        let fit = xmeans(&seqs, 2, 12, Measure::Msm { cost: 1.0 }, 8).unwrap();
        assert!((2..=12).contains(&fit.k), "k = {}", fit.k);
    }

    #[test]
    fn xmeans_split_decision_matches_bic_oracle() {
        // Recompute the first-round BIC comparison independently for the
        // four-class instance: splitting must win exactly for clusters that
        // mix several true classes.
        let (seqs, truth) = four_shape_classes();
        let matrix = distance_matrix(&seqs, Measure::Msm { cost: 1.0 }).unwrap();
        let cfg = KMeansConfig::new(2, derive_seed(17, &[0]));
        let fit =
            kmeans_elastic_impl(&seqs, &cfg, Measure::Msm { cost: 1.0 }, Some(&matrix)).unwrap();

        for cluster in 0..2 {
            let members: Vec<usize> =
                (0..seqs.len()).filter(|&i| fit.labels[i] == cluster).collect();
            if members.len() < XMEANS_MIN_SPLIT {
                continue;
            }
            // Parent model: distances to the cluster centroid.
            let parent_sq: Vec<f64> = members
                .iter()
                .map(|&i| {
                    Measure::Msm { cost: 1.0 }
                        .distance(&seqs[i], &fit.centroids[cluster])
                        .powi(2)
                })
                .collect();
            let subset: Vec<Sequence> = members.iter().map(|&i| seqs[i].clone()).collect();
            let mut split_cfg = KMeansConfig::new(2, derive_seed(17, &[1, 0, cluster as u64]));
            split_cfg.n_init = 2;
            let split = kmeans_elastic_impl(
                &subset,
                &split_cfg,
                Measure::Msm { cost: 1.0 },
                Some(&matrix.submatrix(&members)),
            )
            .unwrap();
            let mut child_sq: Vec<Vec<f64>> = vec![Vec::new(), Vec::new()];
            for (local, _) in members.iter().enumerate() {
                let child = split.labels[local];
                let d = Measure::Msm { cost: 1.0 }
                    .distance(&subset[local], &split.centroids[child]);
                child_sq[child].push(d * d);
            }

            // Oracle: the Gaussian-in-distance-space BIC written out
            // directly, with the data term kept as sum d^2 / (2 var) rather
            // than the collapsed MLE form.
            let oracle = |groups: &[Vec<f64>]| -> f64 {
                let k = groups.len() as f64;
                let n: usize = groups.iter().map(Vec::len).sum();
                let nf = n as f64;
                let mut ll = 0.0;
                for g in groups {
                    let r = g.len() as f64;
                    let s: f64 = g.iter().sum();
                    let var = (s / r).max(1e-10);
                    ll += r * (r / nf).ln();
                    ll -= r / 2.0 * (2.0 * std::f64::consts::PI * var).ln();
                    ll -= s / (2.0 * var);
                }
                ll - k * nf.ln()
            };
            assert!(
                (bic_distance_model(&[parent_sq.clone()]) - oracle(&[parent_sq.clone()])).abs()
                    < 1e-9
            );
            assert!(
                (bic_distance_model(&child_sq) - oracle(&child_sq)).abs() < 1e-9
            );
            let classes: std::collections::BTreeSet<usize> =
                members.iter().map(|&i| truth[i]).collect();
            let split_wins =
                bic_distance_model(&child_sq) > bic_distance_model(&[parent_sq]);
            if classes.len() > 1 {
                assert!(split_wins, "split should improve BIC for a mixed cluster");
            } else {
                assert!(!split_wins, "split should not improve BIC for a pure class");
            }
        }
    }
}
