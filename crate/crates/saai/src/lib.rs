//! Synchronized Anomaly Agreement Index (SAAI) toolkit.
//!
//! Evaluates clusterings of anomalous subsequences in multivariate time
//! series by exploiting the synchronicity of anomalies across correlated
//! channels, together with the machinery needed to benchmark it: elastic
//! distances (DTW, MSM), k-means with DBA centroids, X-Means, silhouette,
//! external metrics (ARI, FMI), a synthetic greenhouse-temperature generator
//! with anomaly injection, Wilcoxon-based method comparison and an
//! experiment harness.

mod anomaly;
mod cluster;
mod elastic;
mod error;
mod experiment;
mod extmetrics;
mod report;
mod rng;
mod saai;
mod series;
mod stats;
mod synthgen;

pub use anomaly::{
    read_anomalies_jsonl, read_anomalies_jsonl_path, validate_anomalies, write_anomalies_jsonl,
    write_anomalies_jsonl_path, AnomalyInterval, ClusteringResult, SyncPairSet,
};
pub use cluster::{
    dba, kmeans_elastic, kmeanspp_init, silhouette, xmeans, KMeansConfig, KMeansFit, XMeansFit,
};
pub use elastic::{
    distance_matrix, dtw, dtw_path, euclidean, moving_average, msm, zero_pad, DistanceMatrix,
    Measure, Sequence,
};
pub use error::{Error, Result};
pub use experiment::{
    anomaly_sequences, run_experiment, select_k, accuracy_table, ExperimentKind, ExperimentSpec,
    Method, TrialRecord, SMOOTHING_WINDOW,
};
pub use extmetrics::{ari, fmi, pearson};
pub use report::{
    accuracy_csv, accuracy_svg, correlation_csv, method_accuracy_vectors, records_csv, report,
    TableFormat,
};
pub use saai::{
    overlap_ratio, saai, saai_p1, saai_p2, sync_pairs_bruteforce, sync_pairs_sweepline,
    SaaiParams, SaaiScore,
};
pub use series::{validate_series, MultivariateSeries};
pub use stats::{mcm, wilcoxon_signed_rank, Mcm, McmCell, WilcoxonResult};
pub use synthgen::{
    base_signal, generate, inject_anomaly, red_noise, AnomalyClass, AnomalyClassSpec,
    GeneratorConfig, MINUTES_PER_DAY,
};
