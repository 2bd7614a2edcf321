//! Shared instance generators for the benchmarks.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use saai::{AnomalyInterval, ClusteringResult, Sequence};

/// Random anomaly intervals spread over a `span`-long timeline so that only
/// a handful of intervals overlap at any time, plus a random clustering.
pub fn sparse_instance(
    n: usize,
    dims: usize,
    span: usize,
    seed: u64,
) -> (Vec<AnomalyInterval>, ClusteringResult) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut anomalies = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    let n_clusters = (n / 4).max(1);
    for id in 0..n {
        let a = rng.random_range(0..span - 40);
        let len = rng.random_range(2..=40);
        anomalies.push(
            AnomalyInterval::new(id, rng.random_range(0..dims), a, a + len, None, None).unwrap(),
        );
        labels.push(rng.random_range(0..n_clusters));
    }
    let ids: Vec<usize> = (0..n).collect();
    let clustering = ClusteringResult::from_labels(&ids, &labels).unwrap();
    (anomalies, clustering)
}

/// A smooth random walk sequence for distance benchmarks.
pub fn walk(len: usize, seed: u64) -> Sequence {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = 0.0;
    let values = (0..len)
        .map(|_| {
            x += rng.random_range(-1.0..1.0);
            x
        })
        .collect();
    Sequence::new(values).unwrap()
}
