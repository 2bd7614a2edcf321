//! Experiment runner: sweep k, select K per metric, measure accuracy.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::anomaly::{AnomalyInterval, ClusteringResult};
use crate::cluster::{kmeans_elastic_impl, silhouette, xmeans, KMeansConfig};
use crate::elastic::{distance_matrix, moving_average, zero_pad, DistanceMatrix, Measure, Sequence};
use crate::error::{Error, Result};
use crate::extmetrics::{ari, fmi};
use crate::rng::derive_seed;
use crate::saai::{saai, saai_p1, saai_p2, SaaiParams};
use crate::series::MultivariateSeries;
use crate::synthgen::{generate, AnomalyClass, GeneratorConfig};

/// Smoothing window applied to every extracted subsequence before
/// clustering and scoring.
pub const SMOOTHING_WINDOW: usize = 5;

/// K-selection methods compared by the experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Saai,
    SaaiP1,
    SaaiP2,
    Ssc,
    Ari,
    Fmi,
    XMeans,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::Saai,
        Method::SaaiP1,
        Method::SaaiP2,
        Method::Ssc,
        Method::Ari,
        Method::Fmi,
        Method::XMeans,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Saai => "saai",
            Method::SaaiP1 => "saai-p1",
            Method::SaaiP2 => "saai-p2",
            Method::Ssc => "ssc",
            Method::Ari => "ari",
            Method::Fmi => "fmi",
            Method::XMeans => "xmeans",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .iter()
            .find(|m| m.name() == s)
            .copied()
            .ok_or_else(|| Error::Parse(format!("unknown method '{s}'")))
    }
}

/// The experiment protocols.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    IncreaseK,
    IncreaseD,
    DecreaseRsync,
    LagSweep,
    Ablation,
    LambdaSweep,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 6] = [
        ExperimentKind::IncreaseK,
        ExperimentKind::IncreaseD,
        ExperimentKind::DecreaseRsync,
        ExperimentKind::LagSweep,
        ExperimentKind::Ablation,
        ExperimentKind::LambdaSweep,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::IncreaseK => "increase-k",
            ExperimentKind::IncreaseD => "increase-d",
            ExperimentKind::DecreaseRsync => "decrease-rsync",
            ExperimentKind::LagSweep => "lag-sweep",
            ExperimentKind::Ablation => "ablation",
            ExperimentKind::LambdaSweep => "lambda-sweep",
        }
    }

    /// Default swept parameter values for this protocol.
    pub fn default_values(self) -> Vec<f64> {
        match self {
            ExperimentKind::IncreaseK | ExperimentKind::Ablation => {
                (2..=6).map(|k| k as f64).collect()
            }
            ExperimentKind::IncreaseD => (2..=10).map(|d| d as f64).collect(),
            ExperimentKind::DecreaseRsync => (0..=10).rev().map(|i| i as f64 / 10.0).collect(),
            ExperimentKind::LagSweep => (-12..=12).map(|h| (h * 60) as f64).collect(),
            ExperimentKind::LambdaSweep => (0..=10).map(|i| i as f64 / 10.0).collect(),
        }
    }

    /// Default method set compared under this protocol.
    pub fn default_methods(self) -> Vec<Method> {
        match self {
            ExperimentKind::Ablation => vec![Method::Saai, Method::SaaiP1, Method::SaaiP2],
            ExperimentKind::LambdaSweep => vec![Method::Saai],
            _ => vec![Method::Saai, Method::Ssc, Method::Ari, Method::Fmi, Method::XMeans],
        }
    }
}

impl std::fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ExperimentKind::ALL
            .iter()
            .find(|k| k.name() == s)
            .copied()
            .ok_or_else(|| Error::Parse(format!("unknown experiment kind '{s}'")))
    }
}

/// Full experiment specification. Defaults: 20 trials per swept point,
/// k in [2, 20), 30-day series with 3 events per class and the kind's
/// standard method set.
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub trials_per_point: usize,
    pub k_lo: usize,
    /// Exclusive upper bound of the k sweep.
    pub k_hi: usize,
    pub methods: Vec<Method>,
    pub seed: u64,
    pub n_days: usize,
    pub events_per_class: usize,
    /// Swept values; `None` uses the kind's defaults.
    pub values: Option<Vec<f64>>,
}

impl ExperimentSpec {
    pub fn new(kind: ExperimentKind, seed: u64) -> Self {
        Self {
            kind,
            trials_per_point: 20,
            k_lo: 2,
            k_hi: 20,
            methods: kind.default_methods(),
            seed,
            n_days: 30,
            events_per_class: 3,
            values: None,
        }
    }

    pub fn values(&self) -> Vec<f64> {
        self.values.clone().unwrap_or_else(|| self.kind.default_values())
    }

    fn validate(&self) -> Result<()> {
        if self.trials_per_point == 0 {
            return Err(Error::InvalidParameter("trials_per_point must be >= 1".into()));
        }
        if self.k_lo < 2 || self.k_hi <= self.k_lo {
            return Err(Error::InvalidParameter(format!(
                "need 2 <= k_lo < k_hi, got [{}, {})",
                self.k_lo, self.k_hi
            )));
        }
        if self.methods.is_empty() {
            return Err(Error::InvalidParameter("no methods selected".into()));
        }
        if self.n_days == 0 || self.events_per_class == 0 {
            return Err(Error::InvalidParameter(
                "n_days and events_per_class must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// One method's k selection on one generated dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub kind: ExperimentKind,
    /// Swept parameter value (K, D, r_sync, lag or lambda).
    pub value: f64,
    pub trial: usize,
    pub method: Method,
    /// Chosen number of clusters; 0 when the trial failed for this method.
    pub selected_k: usize,
    pub true_k: usize,
    pub correct: bool,
}

/// Extracts value subsequences for the anomaly set in id order and smooths
/// them. Returns the interval ids and their sequences.
pub fn anomaly_sequences(
    series: &MultivariateSeries,
    anomalies: &[AnomalyInterval],
) -> Result<(Vec<usize>, Vec<Sequence>)> {
    let mut sorted: Vec<&AnomalyInterval> = anomalies.iter().collect();
    sorted.sort_by_key(|iv| iv.id);
    let mut ids = Vec::with_capacity(sorted.len());
    let mut seqs = Vec::with_capacity(sorted.len());
    for iv in sorted {
        let raw = series.subsequence(iv.dim, iv.a, iv.b)?;
        ids.push(iv.id);
        seqs.push(znorm(&moving_average(&raw, SMOOTHING_WINDOW)?));
    }
    Ok((ids, seqs))
}

// Per-sequence standardization: zero mean, unit variance (identity for
// near-constant sequences).
fn znorm(seq: &Sequence) -> Sequence {
    let x = seq.as_slice();
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    if var <= 1e-12 {
        return seq.clone();
    }
    let std = var.sqrt();
    Sequence::new(x.iter().map(|v| (v - mean) / std).collect()).expect("finite input")
}

// Per-trial clustering sweep shared by all metric-maximizing methods.
struct KSweep {
    ks: Vec<usize>,
    clusterings: Vec<ClusteringResult>,
    labels: Vec<Vec<usize>>,
}

fn run_k_sweep(
    ids: &[usize],
    seqs: &[Sequence],
    member_matrix: &DistanceMatrix,
    k_lo: usize,
    k_hi: usize,
    seed: u64,
) -> Result<KSweep> {
    let k_top = (k_hi - 1).min(seqs.len());
    let mut ks = Vec::new();
    let mut clusterings = Vec::new();
    let mut labels = Vec::new();
    for k in k_lo..=k_top {
        let cfg = KMeansConfig::new(k, derive_seed(seed, &[k as u64]));
        let fit = kmeans_elastic_impl(seqs, &cfg, Measure::Dtw, Some(member_matrix))?;
        clusterings.push(ClusteringResult::from_labels(ids, &fit.labels)?);
        labels.push(fit.labels);
        ks.push(k);
    }
    Ok(KSweep { ks, clusterings, labels })
}

/// Argmax over (k, score) with ties broken toward the smallest k.
pub(crate) fn argmax_k(scores: &[(usize, f64)]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for &(k, s) in scores {
        match best {
            None => best = Some((k, s)),
            Some((_, bs)) if s > bs => best = Some((k, s)),
            _ => {}
        }
    }
    best.map(|(k, _)| k)
}

fn score_sweep(
    sweep: &KSweep,
    anomalies: &[AnomalyInterval],
    ssc_matrix: Option<&DistanceMatrix>,
    truth: Option<&[usize]>,
    method: Method,
    params: &SaaiParams,
) -> Result<usize> {
    let mut scores = Vec::with_capacity(sweep.ks.len());
    for (i, &k) in sweep.ks.iter().enumerate() {
        let clustering = &sweep.clusterings[i];
        let score = match method {
            Method::Saai => saai(anomalies, clustering, params)?.value,
            Method::SaaiP1 => saai_p1(anomalies, clustering, params)?.value,
            Method::SaaiP2 => saai_p2(anomalies, clustering, params)?.value,
            Method::Ssc => {
                let m = ssc_matrix.expect("ssc matrix prepared");
                silhouette(m, &sweep.labels[i])?
            }
            Method::Ari => ari(truth.expect("true classes"), &sweep.labels[i])?,
            Method::Fmi => fmi(truth.expect("true classes"), &sweep.labels[i])?,
            Method::XMeans => unreachable!("xmeans bypasses the sweep"),
        };
        scores.push((k, score));
    }
    argmax_k(&scores).ok_or_else(|| Error::EmptyInput("empty k sweep".into()))
}

fn true_classes(anomalies: &[AnomalyInterval]) -> Result<Vec<usize>> {
    let mut sorted: Vec<&AnomalyInterval> = anomalies.iter().collect();
    sorted.sort_by_key(|iv| iv.id);
    sorted
        .iter()
        .map(|iv| {
            iv.true_class.ok_or_else(|| {
                Error::InvalidInterval(format!("interval {} has no true class", iv.id))
            })
        })
        .collect()
}

/// Selects the number of clusters for one dataset with one method: clusters
/// the smoothed anomaly sequences for every k in `[k_lo, k_hi)` with DTW
/// k-means, scores each clustering with the method's metric and returns the
/// argmax (smallest k on ties). `XMeans` bypasses the sweep and returns the
/// cluster count found by X-Means over the MSM distance.
pub fn select_k(
    series: &MultivariateSeries,
    anomalies: &[AnomalyInterval],
    method: Method,
    k_lo: usize,
    k_hi: usize,
    params: &SaaiParams,
    seed: u64,
) -> Result<usize> {
    if anomalies.is_empty() {
        return Err(Error::EmptyInput("no anomalies".into()));
    }
    if k_lo < 2 || k_hi <= k_lo {
        return Err(Error::InvalidParameter(format!(
            "need 2 <= k_lo < k_hi, got [{k_lo}, {k_hi})"
        )));
    }
    if anomalies.len() < k_lo {
        return Err(Error::InvalidParameter(format!(
            "fewer anomalies ({}) than k_lo ({k_lo})",
            anomalies.len()
        )));
    }
    let (ids, seqs) = anomaly_sequences(series, anomalies)?;
    if method == Method::XMeans {
        let k_top = (k_hi - 1).min(seqs.len());
        let fit = xmeans(&seqs, k_lo, k_top, Measure::Msm { cost: 1.0 }, derive_seed(seed, &[3]))?;
        return Ok(fit.k);
    }
    let member_matrix = distance_matrix(&seqs, Measure::Dtw)?;
    let sweep = run_k_sweep(&ids, &seqs, &member_matrix, k_lo, k_hi, derive_seed(seed, &[2]))?;
    let ssc_matrix = if method == Method::Ssc {
        Some(distance_matrix(&zero_pad(&seqs)?, Measure::Dtw)?)
    } else {
        None
    };
    let truth = if matches!(method, Method::Ari | Method::Fmi) {
        Some(true_classes(anomalies)?)
    } else {
        None
    };
    score_sweep(&sweep, anomalies, ssc_matrix.as_ref(), truth.as_deref(), method, params)
}

fn draw_class_subset(rng: &mut ChaCha8Rng, count: usize) -> Vec<AnomalyClass> {
    let mut pool = AnomalyClass::ALL.to_vec();
    for i in 0..count {
        let j = rng.random_range(i..pool.len());
        pool.swap(i, j);
    }
    pool.truncate(count);
    pool
}

// Generator configuration for one trial of the given protocol point.
fn trial_config(spec: &ExperimentSpec, value: f64, trial_seed: u64) -> GeneratorConfig {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(trial_seed, &[0]));
    let r_sync_drawn = 0.5 + 0.5 * rng.random::<f64>();
    let (k_classes, dims, r_sync, lag) = match spec.kind {
        ExperimentKind::IncreaseK | ExperimentKind::Ablation => {
            (value as usize, 2, r_sync_drawn, 0)
        }
        ExperimentKind::IncreaseD => (4, value as usize, r_sync_drawn, 0),
        ExperimentKind::DecreaseRsync => (4, 2, value, 0),
        ExperimentKind::LagSweep => (4, 2, r_sync_drawn, value as i64),
        ExperimentKind::LambdaSweep => (4, 2, r_sync_drawn, 0),
    };
    let classes = draw_class_subset(&mut rng, k_classes);
    GeneratorConfig {
        n_days: spec.n_days,
        dims,
        classes,
        r_sync,
        lag_minutes: lag,
        events_per_class: spec.events_per_class,
        noise_std: 0.5,
        noise_corr: 0.5,
        seed: derive_seed(trial_seed, &[1]),
    }
}

fn record(
    spec: &ExperimentSpec,
    value: f64,
    trial: usize,
    method: Method,
    selected: Result<usize>,
    true_k: usize,
) -> TrialRecord {
    let selected_k = match selected {
        Ok(k) => k,
        Err(e) => {
            eprintln!(
                "warning: {} value {value} trial {trial} method {method}: {e}",
                spec.kind
            );
            0
        }
    };
    TrialRecord {
        kind: spec.kind,
        value,
        trial,
        method,
        selected_k,
        true_k,
        correct: selected_k == true_k,
    }
}

// Scores every requested method on one generated dataset, sharing the
// clustering sweep. For the lambda sweep, `lambdas` carries one lambda per
// output record batch.
fn run_trial(spec: &ExperimentSpec, value: f64, point: usize, trial: usize) -> Vec<TrialRecord> {
    let trial_seed = derive_seed(spec.seed, &[point as u64, trial as u64]);
    let config = trial_config(spec, value, trial_seed);
    let true_k = config.classes.len();
    let (series, anomalies) = match generate(&config) {
        Ok(x) => x,
        Err(e) => {
            return spec
                .methods
                .iter()
                .map(|&m| record(spec, value, trial, m, Err(e_clone(&e)), true_k))
                .collect();
        }
    };
    score_dataset(spec, &series, &anomalies, trial, trial_seed, true_k, &[value])
}

// Duplicate an error for fan-out into per-method records.
fn e_clone(e: &Error) -> Error {
    Error::Infeasible(e.to_string())
}

#[allow(clippy::too_many_arguments)]
fn score_dataset(
    spec: &ExperimentSpec,
    series: &MultivariateSeries,
    anomalies: &[AnomalyInterval],
    trial: usize,
    trial_seed: u64,
    true_k: usize,
    lambdas: &[f64],
) -> Vec<TrialRecord> {
    let mut out = Vec::new();
    let prep = anomaly_sequences(series, anomalies).and_then(|(ids, seqs)| {
        if seqs.len() < spec.k_lo {
            return Err(Error::InvalidParameter(format!(
                "fewer anomalies ({}) than k_lo ({})",
                seqs.len(),
                spec.k_lo
            )));
        }
        Ok((ids, seqs))
    });
    let (ids, seqs) = match prep {
        Ok(x) => x,
        Err(e) => {
            for &m in &spec.methods {
                for &l in lambdas {
                    out.push(record(spec, l, trial, m, Err(e_clone(&e)), true_k));
                }
            }
            return out;
        }
    };

    let needs_sweep = spec.methods.iter().any(|&m| m != Method::XMeans);
    let sweep = if needs_sweep {
        distance_matrix(&seqs, Measure::Dtw).and_then(|m| {
            run_k_sweep(&ids, &seqs, &m, spec.k_lo, spec.k_hi, derive_seed(trial_seed, &[2]))
        })
    } else {
        Err(Error::EmptyInput("sweep not needed".into()))
    };
    let ssc_matrix = if spec.methods.contains(&Method::Ssc) {
        zero_pad(&seqs).and_then(|p| distance_matrix(&p, Measure::Dtw)).ok()
    } else {
        None
    };
    let truth = if spec.methods.iter().any(|&m| matches!(m, Method::Ari | Method::Fmi)) {
        true_classes(anomalies).ok()
    } else {
        None
    };

    for &method in &spec.methods {
        if method == Method::XMeans {
            let k_top = (spec.k_hi - 1).min(seqs.len());
            let sel = xmeans(
                &seqs,
                spec.k_lo,
                k_top,
                Measure::Msm { cost: 1.0 },
                derive_seed(trial_seed, &[3]),
            )
            .map(|f| f.k);
            for &l in lambdas {
                let sel = match &sel {
                    Ok(k) => Ok(*k),
                    Err(e) => Err(e_clone(e)),
                };
                out.push(record(spec, l, trial, method, sel, true_k));
            }
            continue;
        }
        match &sweep {
            Ok(sweep) => {
                for &l in lambdas {
                    let params = match spec.kind {
                        ExperimentKind::LambdaSweep => SaaiParams::new(l, 0.5)
                            .expect("lambda values are in [0, 1]"),
                        _ => SaaiParams::default(),
                    };
                    let sel = score_sweep(
                        sweep,
                        anomalies,
                        ssc_matrix.as_ref(),
                        truth.as_deref(),
                        method,
                        &params,
                    );
                    out.push(record(spec, l, trial, method, sel, true_k));
                }
            }
            Err(e) => {
                for &l in lambdas {
                    out.push(record(spec, l, trial, method, Err(e_clone(e)), true_k));
                }
            }
        }
    }
    out
}

/// Runs the experiment protocol: for each swept value, generates
/// `trials_per_point` datasets (fresh per-trial seeds, class subset and
/// r_sync redrawn each trial) and records every method's selection.
/// Trials run in parallel; the record order is deterministic.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<TrialRecord>> {
    spec.validate()?;
    let values = spec.values();
    if values.is_empty() {
        return Err(Error::InvalidParameter("no swept values".into()));
    }

    if spec.kind == ExperimentKind::LambdaSweep {
        // The datasets and clusterings are lambda-independent: generate one
        // dataset per trial and score it at every lambda.
        let records: Vec<Vec<TrialRecord>> = (0..spec.trials_per_point)
            .into_par_iter()
            .map(|trial| {
                let trial_seed = derive_seed(spec.seed, &[0, trial as u64]);
                let config = trial_config(spec, values[0], trial_seed);
                let true_k = config.classes.len();
                match generate(&config) {
                    Ok((series, anomalies)) => score_dataset(
                        spec, &series, &anomalies, trial, trial_seed, true_k, &values,
                    ),
                    Err(e) => spec
                        .methods
                        .iter()
                        .flat_map(|&m| {
                            values
                                .iter()
                                .map(move |&l| (m, l))
                                .collect::<Vec<_>>()
                        })
                        .map(|(m, l)| record(spec, l, trial, m, Err(e_clone(&e)), true_k))
                        .collect(),
                }
            })
            .collect();
        let mut flat: Vec<TrialRecord> = records.into_iter().flatten().collect();
        flat.sort_by(|a, b| {
            a.value
                .total_cmp(&b.value)
                .then(a.trial.cmp(&b.trial))
                .then(a.method.cmp(&b.method))
        });
        return Ok(flat);
    }

    let units: Vec<(usize, usize)> = (0..values.len())
        .flat_map(|p| (0..spec.trials_per_point).map(move |t| (p, t)))
        .collect();
    let nested: Vec<Vec<TrialRecord>> = units
        .par_iter()
        .map(|&(p, t)| run_trial(spec, values[p], p, t))
        .collect();
    Ok(nested.into_iter().flatten().collect())
}

/// Mean accuracy per (swept value, method), ordered by value then method.
pub fn accuracy_table(records: &[TrialRecord]) -> Vec<(f64, Method, usize, f64)> {
    let mut keys: Vec<(u64, f64, Method)> = Vec::new();
    let mut counts: std::collections::BTreeMap<(u64, usize), (usize, usize)> =
        std::collections::BTreeMap::new();
    for r in records {
        let bits = r.value.to_bits();
        if !keys.iter().any(|&(b, _, m)| b == bits && m == r.method) {
            keys.push((bits, r.value, r.method));
        }
        let midx = Method::ALL.iter().position(|&m| m == r.method).unwrap();
        let entry = counts.entry((bits, midx)).or_insert((0, 0));
        entry.0 += 1;
        if r.correct {
            entry.1 += 1;
        }
    }
    keys.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.2.cmp(&b.2)));
    keys.into_iter()
        .map(|(bits, value, method)| {
            let midx = Method::ALL.iter().position(|&m| m == method).unwrap();
            let (n, ok) = counts[&(bits, midx)];
            (value, method, n, ok as f64 / n as f64)
        })
        .collect()
}
