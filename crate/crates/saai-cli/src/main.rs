//! `saai` command line: synthetic data generation, clustering, metric
//! scoring, K selection and the full experiment suite.

use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use saai::{
    anomaly_sequences, distance_matrix, generate, kmeans_elastic, mcm, read_anomalies_jsonl_path,
    report, run_experiment, saai as saai_score, saai_p1, saai_p2, select_k, silhouette,
    validate_anomalies, write_anomalies_jsonl_path, zero_pad, AnomalyClass, AnomalyInterval,
    ClusteringResult, Error, ExperimentKind, ExperimentSpec, GeneratorConfig, KMeansConfig,
    Measure, Method, MultivariateSeries, Result, SaaiParams, TableFormat,
};

#[derive(Parser)]
#[command(
    name = "saai",
    version,
    about = "Synchronized Anomaly Agreement Index toolkit",
    max_term_width = 100
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic multivariate series with injected anomalies.
    Generate(GenerateArgs),
    /// Cluster the anomalous subsequences of a series with elastic k-means.
    Cluster(ClusterArgs),
    /// Score a clustering with one metric and print the value.
    Score(ScoreArgs),
    /// Select the number of clusters by maximizing a metric over a k sweep.
    SelectK(SelectKArgs),
    /// Run an experiment protocol and write result tables.
    Experiment(ExperimentArgs),
    /// Render a multi-comparison matrix from an accuracy CSV.
    Mcm(McmArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Series length in days (1440 one-minute samples per day).
    #[arg(long, default_value_t = 30)]
    days: usize,
    /// Number of dimensions.
    #[arg(long, default_value_t = 2)]
    dims: usize,
    /// Comma-separated anomaly class names, or 'all'.
    #[arg(long, default_value = "all", value_parser = parse_classes)]
    classes: ClassList,
    /// Fraction of event slots injected synchronized across dimensions.
    #[arg(long, default_value_t = 1.0)]
    rsync: f64,
    /// Lag in minutes applied to dimensions 2..D relative to dimension 1.
    #[arg(long, default_value_t = 0)]
    lag: i64,
    /// Events injected per class (per dimension).
    #[arg(long, default_value_t = 3)]
    events_per_class: usize,
    /// Stationary standard deviation of the AR(1) sensor noise.
    #[arg(long, default_value_t = 0.5)]
    noise_std: f64,
    /// Lag-1 correlation of the AR(1) sensor noise.
    #[arg(long, default_value_t = 0.5)]
    noise_corr: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV path for the series.
    #[arg(long)]
    out_series: PathBuf,
    /// Output JSON Lines path for the ground-truth anomalies.
    #[arg(long)]
    out_anomalies: PathBuf,
}

#[derive(Clone)]
struct ClassList(Vec<AnomalyClass>);

fn parse_classes(s: &str) -> std::result::Result<ClassList, String> {
    if s == "all" {
        return Ok(ClassList(AnomalyClass::ALL.to_vec()));
    }
    let mut out = Vec::new();
    for part in s.split(',') {
        let class: AnomalyClass = part.trim().parse().map_err(|e: Error| e.to_string())?;
        out.push(class);
    }
    Ok(ClassList(out))
}

#[derive(Clone, Copy, ValueEnum)]
enum MeasureArg {
    Dtw,
    Msm,
}

#[derive(Args)]
struct ClusterArgs {
    #[arg(long)]
    series: PathBuf,
    #[arg(long)]
    anomalies: PathBuf,
    /// Number of clusters.
    #[arg(long)]
    k: usize,
    #[arg(long, value_enum, default_value_t = MeasureArg::Dtw)]
    measure: MeasureArg,
    /// Split/merge cost of the MSM distance.
    #[arg(long, default_value_t = 1.0)]
    msm_cost: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output JSON Lines path: the anomalies with cluster labels filled in.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricArg {
    Saai,
    #[value(name = "saai-p1")]
    SaaiP1,
    #[value(name = "saai-p2")]
    SaaiP2,
    Ssc,
    Ari,
    Fmi,
}

#[derive(Args)]
struct ScoreArgs {
    #[arg(long)]
    series: PathBuf,
    #[arg(long)]
    anomalies: PathBuf,
    /// JSON Lines anomaly file carrying the cluster assignments to score.
    #[arg(long)]
    clustering: PathBuf,
    #[arg(long, value_enum)]
    metric: MetricArg,
    #[arg(long, default_value_t = 0.5)]
    lambda: f64,
    #[arg(long, default_value_t = 0.5)]
    theta: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Saai,
    #[value(name = "saai-p1")]
    SaaiP1,
    #[value(name = "saai-p2")]
    SaaiP2,
    Ssc,
    Ari,
    Fmi,
    Xmeans,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Method {
        match m {
            MethodArg::Saai => Method::Saai,
            MethodArg::SaaiP1 => Method::SaaiP1,
            MethodArg::SaaiP2 => Method::SaaiP2,
            MethodArg::Ssc => Method::Ssc,
            MethodArg::Ari => Method::Ari,
            MethodArg::Fmi => Method::Fmi,
            MethodArg::Xmeans => Method::XMeans,
        }
    }
}

#[derive(Args)]
struct SelectKArgs {
    #[arg(long)]
    series: PathBuf,
    #[arg(long)]
    anomalies: PathBuf,
    #[arg(long, value_enum)]
    method: MethodArg,
    #[arg(long, default_value_t = 2)]
    k_min: usize,
    /// Exclusive upper bound of the k sweep.
    #[arg(long, default_value_t = 20)]
    k_max: usize,
    #[arg(long, default_value_t = 0.5)]
    lambda: f64,
    #[arg(long, default_value_t = 0.5)]
    theta: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    #[value(name = "increase-k")]
    IncreaseK,
    #[value(name = "increase-d")]
    IncreaseD,
    #[value(name = "decrease-rsync")]
    DecreaseRsync,
    #[value(name = "lag-sweep")]
    LagSweep,
    Ablation,
    #[value(name = "lambda-sweep")]
    LambdaSweep,
}

impl From<KindArg> for ExperimentKind {
    fn from(k: KindArg) -> ExperimentKind {
        match k {
            KindArg::IncreaseK => ExperimentKind::IncreaseK,
            KindArg::IncreaseD => ExperimentKind::IncreaseD,
            KindArg::DecreaseRsync => ExperimentKind::DecreaseRsync,
            KindArg::LagSweep => ExperimentKind::LagSweep,
            KindArg::Ablation => ExperimentKind::Ablation,
            KindArg::LambdaSweep => ExperimentKind::LambdaSweep,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Md,
}

impl From<FormatArg> for TableFormat {
    fn from(f: FormatArg) -> TableFormat {
        match f {
            FormatArg::Csv => TableFormat::Csv,
            FormatArg::Md => TableFormat::Markdown,
        }
    }
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long, value_enum)]
    kind: KindArg,
    /// Datasets generated per swept parameter value.
    #[arg(long, default_value_t = 20)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out_dir: PathBuf,
    /// Comma-separated method names; defaults to the protocol's method set.
    #[arg(long, value_delimiter = ',', value_enum)]
    methods: Option<Vec<MethodArg>>,
    #[arg(long, default_value_t = 2)]
    k_min: usize,
    /// Exclusive upper bound of the k sweep.
    #[arg(long, default_value_t = 20)]
    k_max: usize,
    #[arg(long, default_value_t = 30)]
    days: usize,
    #[arg(long, default_value_t = 3)]
    events_per_class: usize,
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,
    /// Also write an accuracy-vs-parameter SVG plot.
    #[arg(long)]
    plots: bool,
}

#[derive(Args)]
struct McmArgs {
    /// Accuracy CSV with columns value, method, accuracy.
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Err(e) = run(cli.command) {
        eprintln!("error: {e}");
        std::process::exit(2);
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Generate(args) => cmd_generate(args),
        Command::Cluster(args) => cmd_cluster(args),
        Command::Score(args) => cmd_score(args),
        Command::SelectK(args) => cmd_select_k(args),
        Command::Experiment(args) => cmd_experiment(args),
        Command::Mcm(args) => cmd_mcm(args),
    }
}

fn cmd_generate(args: GenerateArgs) -> Result<()> {
    let config = GeneratorConfig {
        n_days: args.days,
        dims: args.dims,
        classes: args.classes.0,
        r_sync: args.rsync,
        lag_minutes: args.lag,
        events_per_class: args.events_per_class,
        noise_std: args.noise_std,
        noise_corr: args.noise_corr,
        seed: args.seed,
    };
    let (series, anomalies) = generate(&config)?;
    series.write_csv_path(&args.out_series)?;
    write_anomalies_jsonl_path(&anomalies, &args.out_anomalies)?;
    eprintln!(
        "wrote {} samples x {} dims to {} and {} anomalies to {}",
        series.len(),
        series.n_dims(),
        args.out_series.display(),
        anomalies.len(),
        args.out_anomalies.display()
    );
    Ok(())
}

fn load_instance(
    series_path: &PathBuf,
    anomalies_path: &PathBuf,
) -> Result<(MultivariateSeries, Vec<AnomalyInterval>)> {
    let series = MultivariateSeries::read_csv_path(series_path)?;
    let anomalies = read_anomalies_jsonl_path(anomalies_path)?;
    validate_anomalies(&anomalies, &series)?;
    Ok((series, anomalies))
}

fn cmd_cluster(args: ClusterArgs) -> Result<()> {
    let (series, mut anomalies) = load_instance(&args.series, &args.anomalies)?;
    let measure = match args.measure {
        MeasureArg::Dtw => Measure::Dtw,
        MeasureArg::Msm => Measure::msm(args.msm_cost)?,
    };
    let (ids, seqs) = anomaly_sequences(&series, &anomalies)?;
    let fit = kmeans_elastic(&seqs, &KMeansConfig::new(args.k, args.seed), measure)?;
    let assignment: BTreeMap<usize, usize> = ids.iter().copied().zip(fit.labels).collect();
    for iv in &mut anomalies {
        iv.cluster = assignment.get(&iv.id).copied();
    }
    anomalies.sort_by_key(|iv| iv.id);
    write_anomalies_jsonl_path(&anomalies, &args.out)?;
    eprintln!(
        "clustered {} anomalies into k={} (inertia {:.6}) -> {}",
        anomalies.len(),
        args.k,
        fit.inertia,
        args.out.display()
    );
    Ok(())
}

fn clustering_from_file(path: &PathBuf) -> Result<ClusteringResult> {
    let labelled = read_anomalies_jsonl_path(path)?;
    let mut map = BTreeMap::new();
    for iv in &labelled {
        let cluster = iv.cluster.ok_or_else(|| {
            Error::InvalidClustering(format!("interval {} has no cluster label", iv.id))
        })?;
        if map.insert(iv.id, cluster).is_some() {
            return Err(Error::InvalidClustering(format!("duplicate id {}", iv.id)));
        }
    }
    ClusteringResult::new(map)
}

fn cmd_score(args: ScoreArgs) -> Result<()> {
    let (series, anomalies) = load_instance(&args.series, &args.anomalies)?;
    let clustering = clustering_from_file(&args.clustering)?;
    let params = SaaiParams::new(args.lambda, args.theta)?;
    let value = match args.metric {
        MetricArg::Saai | MetricArg::SaaiP1 | MetricArg::SaaiP2 => {
            let score = match args.metric {
                MetricArg::Saai => saai_score(&anomalies, &clustering, &params)?,
                MetricArg::SaaiP1 => saai_p1(&anomalies, &clustering, &params)?,
                _ => saai_p2(&anomalies, &clustering, &params)?,
            };
            if score.no_sync_pairs {
                eprintln!("warning: no synchronized pairs; main term defined as 0");
            }
            score.value
        }
        MetricArg::Ssc => {
            let (ids, seqs) = anomaly_sequences(&series, &anomalies)?;
            let matrix = distance_matrix(&zero_pad(&seqs)?, Measure::Dtw)?;
            let labels = labels_in_id_order(&ids, &clustering)?;
            silhouette(&matrix, &labels)?
        }
        MetricArg::Ari | MetricArg::Fmi => {
            let (ids, _) = anomaly_sequences(&series, &anomalies)?;
            let labels = labels_in_id_order(&ids, &clustering)?;
            let truth = truth_in_id_order(&ids, &anomalies)?;
            match args.metric {
                MetricArg::Ari => saai::ari(&truth, &labels)?,
                _ => saai::fmi(&truth, &labels)?,
            }
        }
    };
    println!("{value}");
    Ok(())
}

fn labels_in_id_order(ids: &[usize], clustering: &ClusteringResult) -> Result<Vec<usize>> {
    ids.iter()
        .map(|id| {
            clustering.cluster_of(*id).ok_or_else(|| {
                Error::InvalidClustering(format!("interval {id} has no cluster label"))
            })
        })
        .collect()
}

fn truth_in_id_order(ids: &[usize], anomalies: &[AnomalyInterval]) -> Result<Vec<usize>> {
    let by_id: BTreeMap<usize, &AnomalyInterval> =
        anomalies.iter().map(|iv| (iv.id, iv)).collect();
    ids.iter()
        .map(|id| {
            by_id
                .get(id)
                .and_then(|iv| iv.true_class)
                .ok_or_else(|| Error::InvalidInterval(format!("interval {id} has no true class")))
        })
        .collect()
}

fn cmd_select_k(args: SelectKArgs) -> Result<()> {
    let (series, anomalies) = load_instance(&args.series, &args.anomalies)?;
    let params = SaaiParams::new(args.lambda, args.theta)?;
    let k = select_k(
        &series,
        &anomalies,
        args.method.into(),
        args.k_min,
        args.k_max,
        &params,
        args.seed,
    )?;
    println!("{k}");
    Ok(())
}

fn cmd_experiment(args: ExperimentArgs) -> Result<()> {
    let mut spec = ExperimentSpec::new(args.kind.into(), args.seed);
    spec.trials_per_point = args.trials;
    spec.k_lo = args.k_min;
    spec.k_hi = args.k_max;
    spec.n_days = args.days;
    spec.events_per_class = args.events_per_class;
    if let Some(methods) = args.methods {
        spec.methods = methods.into_iter().map(Method::from).collect();
    }
    let records = run_experiment(&spec)?;
    let paths = report(&records, &args.out_dir, args.format.into(), args.plots)?;
    for p in paths {
        eprintln!("wrote {}", p.display());
    }
    Ok(())
}

fn cmd_mcm(args: McmArgs) -> Result<()> {
    let content = std::fs::read_to_string(&args.input)?;
    let mut reader = csv::ReaderBuilder::new().from_reader(content.as_bytes());
    let headers = reader.headers().map_err(|e| Error::Parse(e.to_string()))?.clone();
    let col = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Parse(format!("missing column '{name}'")))
    };
    let (vi, mi, ai) = (col("value")?, col("method")?, col("accuracy")?);
    let mut methods: Vec<String> = Vec::new();
    let mut data: BTreeMap<(String, u64), f64> = BTreeMap::new();
    let mut values: Vec<f64> = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
        let value: f64 = rec[vi]
            .parse()
            .map_err(|_| Error::Parse(format!("bad value '{}'", &rec[vi])))?;
        let method = rec[mi].to_string();
        let accuracy: f64 = rec[ai]
            .parse()
            .map_err(|_| Error::Parse(format!("bad accuracy '{}'", &rec[ai])))?;
        if !methods.contains(&method) {
            methods.push(method.clone());
        }
        if !values.iter().any(|v| v.to_bits() == value.to_bits()) {
            values.push(value);
        }
        data.insert((method, value.to_bits()), accuracy);
    }
    values.sort_by(f64::total_cmp);
    let mut entries = Vec::new();
    for m in methods {
        let mut vec = Vec::with_capacity(values.len());
        for v in &values {
            let acc = data.get(&(m.clone(), v.to_bits())).ok_or_else(|| {
                Error::Parse(format!("method {m} has no accuracy for value {v}"))
            })?;
            vec.push(*acc);
        }
        entries.push((m, vec));
    }
    let table = mcm(&entries)?;
    match TableFormat::from(args.format) {
        TableFormat::Csv => print!("{}", table.to_csv()),
        TableFormat::Markdown => print!("{}", table.to_markdown()),
    }
    Ok(())
}
