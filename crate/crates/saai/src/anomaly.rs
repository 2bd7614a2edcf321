//! Anomalous subsequences, cluster assignments and synchronized-pair sets.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::MultivariateSeries;

/// A univariate anomalous subsequence: dimension index plus inclusive index
/// bounds `[a, b]` into the series, with optional ground-truth class and
/// cluster assignment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnomalyInterval {
    pub id: usize,
    pub dim: usize,
    pub a: usize,
    pub b: usize,
    pub true_class: Option<usize>,
    pub cluster: Option<usize>,
}

impl AnomalyInterval {
    pub fn new(
        id: usize,
        dim: usize,
        a: usize,
        b: usize,
        true_class: Option<usize>,
        cluster: Option<usize>,
    ) -> Result<Self> {
        if a >= b {
            return Err(Error::InvalidInterval(format!(
                "interval {id} must satisfy a < b, got a={a}, b={b}"
            )));
        }
        Ok(Self { id, dim, a, b, true_class, cluster })
    }

    /// Interval length `L = b - a + 1`.
    pub fn len(&self) -> usize {
        self.b - self.a + 1
    }

    pub fn is_empty(&self) -> bool {
        false // L >= 2 by construction
    }
}

/// Checks an anomaly set against the series it refers to: valid bounds and
/// dimensions, unique ids.
pub fn validate_anomalies(anomalies: &[AnomalyInterval], series: &MultivariateSeries) -> Result<()> {
    let mut seen = BTreeSet::new();
    for iv in anomalies {
        if iv.a >= iv.b {
            return Err(Error::InvalidInterval(format!(
                "interval {} must satisfy a < b, got a={}, b={}",
                iv.id, iv.a, iv.b
            )));
        }
        if iv.dim >= series.n_dims() {
            return Err(Error::InvalidInterval(format!(
                "interval {} has dim {} but series has {} dimensions",
                iv.id,
                iv.dim,
                series.n_dims()
            )));
        }
        if iv.b >= series.len() {
            return Err(Error::InvalidInterval(format!(
                "interval {} ends at {} but series has length {}",
                iv.id,
                iv.b,
                series.len()
            )));
        }
        if !seen.insert(iv.id) {
            return Err(Error::InvalidInterval(format!("duplicate interval id {}", iv.id)));
        }
    }
    Ok(())
}

/// Writes one JSON object per interval, in the order given.
pub fn write_anomalies_jsonl<W: Write>(anomalies: &[AnomalyInterval], mut writer: W) -> Result<()> {
    for iv in anomalies {
        serde_json::to_writer(&mut writer, iv)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

pub fn write_anomalies_jsonl_path<P: AsRef<Path>>(
    anomalies: &[AnomalyInterval],
    path: P,
) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_anomalies_jsonl(anomalies, std::io::BufWriter::new(file))
}

/// Reads a JSON Lines anomaly file. Blank lines are ignored.
pub fn read_anomalies_jsonl<R: BufRead>(reader: R) -> Result<Vec<AnomalyInterval>> {
    let mut out = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let iv: AnomalyInterval = serde_json::from_str(&line)
            .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
        if iv.a >= iv.b {
            return Err(Error::InvalidInterval(format!(
                "line {}: interval {} must satisfy a < b",
                lineno + 1,
                iv.id
            )));
        }
        out.push(iv);
    }
    Ok(out)
}

pub fn read_anomalies_jsonl_path<P: AsRef<Path>>(path: P) -> Result<Vec<AnomalyInterval>> {
    let file = std::fs::File::open(path)?;
    read_anomalies_jsonl(std::io::BufReader::new(file))
}

/// A cluster assignment over an anomaly set.
///
/// `k` counts non-empty clusters and `n_singleton` the clusters with exactly
/// one member; both are derived from the assignment map on construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusteringResult {
    assignments: BTreeMap<usize, usize>,
    k: usize,
    n_singleton: usize,
}

impl ClusteringResult {
    pub fn new(assignments: BTreeMap<usize, usize>) -> Result<Self> {
        if assignments.is_empty() {
            return Err(Error::InvalidClustering("no assignments".into()));
        }
        let mut sizes: BTreeMap<usize, usize> = BTreeMap::new();
        for &label in assignments.values() {
            *sizes.entry(label).or_insert(0) += 1;
        }
        let k = sizes.len();
        let n_singleton = sizes.values().filter(|&&c| c == 1).count();
        Ok(Self { assignments, k, n_singleton })
    }

    /// Builds the assignment map by zipping interval ids with labels.
    pub fn from_labels(ids: &[usize], labels: &[usize]) -> Result<Self> {
        if ids.len() != labels.len() {
            return Err(Error::LengthMismatch { left: ids.len(), right: labels.len() });
        }
        let mut map = BTreeMap::new();
        for (&id, &label) in ids.iter().zip(labels) {
            if map.insert(id, label).is_some() {
                return Err(Error::InvalidClustering(format!("duplicate id {id}")));
            }
        }
        Self::new(map)
    }

    /// Number of non-empty clusters K.
    pub fn k(&self) -> usize {
        self.k
    }

    /// Number of pseudo-clusters (exactly one member).
    pub fn n_singleton(&self) -> usize {
        self.n_singleton
    }

    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn is_empty(&self) -> bool {
        false // non-empty by construction
    }

    pub fn cluster_of(&self, id: usize) -> Option<usize> {
        self.assignments.get(&id).copied()
    }

    pub fn assignments(&self) -> &BTreeMap<usize, usize> {
        &self.assignments
    }

    /// Errors unless every interval id is assigned.
    pub fn ensure_covers(&self, anomalies: &[AnomalyInterval]) -> Result<()> {
        for iv in anomalies {
            if !self.assignments.contains_key(&iv.id) {
                return Err(Error::InvalidClustering(format!(
                    "interval {} has no cluster assignment",
                    iv.id
                )));
            }
        }
        Ok(())
    }
}

/// The synchronized pairs `A_S` and the agreeing subset `A*_S`, stored as
/// unordered id pairs normalized to `(min, max)`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SyncPairSet {
    sync_pairs: BTreeSet<(usize, usize)>,
    agreeing_pairs: BTreeSet<(usize, usize)>,
}

impl SyncPairSet {
    pub(crate) fn insert(&mut self, id_a: usize, id_b: usize, agree: bool) {
        let pair = (id_a.min(id_b), id_a.max(id_b));
        self.sync_pairs.insert(pair);
        if agree {
            self.agreeing_pairs.insert(pair);
        }
    }

    /// All synchronized pairs `A_S`.
    pub fn sync_pairs(&self) -> &BTreeSet<(usize, usize)> {
        &self.sync_pairs
    }

    /// The subset `A*_S` whose members share a cluster.
    pub fn agreeing_pairs(&self) -> &BTreeSet<(usize, usize)> {
        &self.agreeing_pairs
    }

    pub fn n_sync(&self) -> usize {
        self.sync_pairs.len()
    }

    pub fn n_agreeing(&self) -> usize {
        self.agreeing_pairs.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_rejects_degenerate_bounds() {
        assert!(AnomalyInterval::new(0, 0, 5, 5, None, None).is_err());
        assert!(AnomalyInterval::new(0, 0, 6, 5, None, None).is_err());
        assert!(AnomalyInterval::new(0, 0, 5, 6, None, None).is_ok());
    }

    #[test]
    fn clustering_counts_from_assignments() {
        // clusters: {0,1} -> 7, {2} -> 3, {3} -> 9
        let c = ClusteringResult::from_labels(&[0, 1, 2, 3], &[7, 7, 3, 9]).unwrap();
        assert_eq!(c.k(), 3);
        assert_eq!(c.n_singleton(), 2);
        assert_eq!(c.cluster_of(1), Some(7));
        assert_eq!(c.cluster_of(42), None);
    }

    #[test]
    fn clustering_rejects_empty_and_duplicates() {
        assert!(ClusteringResult::new(BTreeMap::new()).is_err());
        assert!(ClusteringResult::from_labels(&[1, 1], &[0, 1]).is_err());
    }

    #[test]
    fn jsonl_round_trip() {
        let ivs = vec![
            AnomalyInterval::new(0, 0, 10, 20, Some(2), None).unwrap(),
            AnomalyInterval::new(1, 1, 15, 25, None, Some(4)).unwrap(),
        ];
        let mut buf = Vec::new();
        write_anomalies_jsonl(&ivs, &mut buf).unwrap();
        let parsed = read_anomalies_jsonl(buf.as_slice()).unwrap();
        assert_eq!(ivs, parsed);
    }

    #[test]
    fn jsonl_reports_bad_lines() {
        let data = "{\"id\":0,\"dim\":0,\"a\":9,\"b\":3,\"true_class\":null,\"cluster\":null}\n";
        let err = read_anomalies_jsonl(data.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("a < b"), "{err}");
    }

    #[test]
    fn validate_anomalies_checks_series_bounds() {
        let series =
            MultivariateSeries::new(0, 1, vec![vec![0.0; 50], vec![0.0; 50]]).unwrap();
        let ok = vec![AnomalyInterval::new(0, 1, 10, 49, None, None).unwrap()];
        assert!(validate_anomalies(&ok, &series).is_ok());

        let bad_dim = vec![AnomalyInterval::new(0, 2, 10, 20, None, None).unwrap()];
        assert!(validate_anomalies(&bad_dim, &series).is_err());

        let bad_end = vec![AnomalyInterval::new(0, 0, 10, 50, None, None).unwrap()];
        assert!(validate_anomalies(&bad_end, &series).is_err());

        let dup = vec![
            AnomalyInterval::new(3, 0, 1, 5, None, None).unwrap(),
            AnomalyInterval::new(3, 1, 1, 5, None, None).unwrap(),
        ];
        assert!(validate_anomalies(&dup, &series).is_err());
    }
}
