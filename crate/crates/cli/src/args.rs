use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ftsclust::clustering::{Algorithm, DEFAULT_MAX_ITER, DEFAULT_STARTS, DEFAULT_TOL};
use ftsclust::fqa::DegeneratePolicy;
use ftsclust::{FqaParams, Metric, MetricSpec, Thresholds};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "ftsclust", version, about = "Fuzzy clustering of functional time series by serial dependence")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a benchmark scenario into CSV files plus a manifest.
    Simulate(SimulateArgs),
    /// Compute per-series features and the pairwise dissimilarity matrix.
    Features(FeaturesArgs),
    /// Fit a fuzzy partition.
    Cluster(ClusterArgs),
    /// Select lags by distance-correlation tests, then (C, m) by Xie-Beni.
    Select(SelectArgs),
    /// Score a partition against the labels in a manifest.
    Evaluate(EvaluateArgs),
    /// Two-dimensional metric scaling of a distance matrix.
    Mds(MdsArgs),
    /// Membership-weighted mean features of each cluster.
    Summarize(SummarizeArgs),
    /// Monte-Carlo replication of a scenario over a grid of m values.
    Replicate(ReplicateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MetricArg {
    #[value(name = "FQA", alias = "fqa")]
    Fqa,
    #[value(name = "FACF", alias = "facf")]
    Facf,
    #[value(name = "FSACF", alias = "fsacf")]
    Fsacf,
    #[value(name = "K_m", alias = "k_m")]
    KendallMax,
    #[value(name = "K_i", alias = "k_i")]
    KendallIntegral,
}

impl From<MetricArg> for Metric {
    fn from(m: MetricArg) -> Self {
        match m {
            MetricArg::Fqa => Metric::Fqa,
            MetricArg::Facf => Metric::Facf,
            MetricArg::Fsacf => Metric::Fsacf,
            MetricArg::KendallMax => Metric::KendallMax,
            MetricArg::KendallIntegral => Metric::KendallIntegral,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AlgorithmArg {
    #[value(name = "c-medoids", alias = "medoids")]
    Medoids,
    #[value(name = "c-means", alias = "means")]
    Means,
}

impl From<AlgorithmArg> for Algorithm {
    fn from(a: AlgorithmArg) -> Self {
        match a {
            AlgorithmArg::Medoids => Algorithm::Medoids,
            AlgorithmArg::Means => Algorithm::Means,
        }
    }
}

fn parse_thresholds(s: &str) -> Result<Thresholds, String> {
    if s == "reduced" {
        return Ok(Thresholds::Reduced);
    }
    s.split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|e| format!("{v:?}: {e}")))
        .collect::<Result<Vec<_>, _>>()
        .map(Thresholds::Explicit)
}

#[derive(Debug, Clone, Args)]
pub struct MetricOpts {
    #[arg(long, value_enum, default_value = "FQA")]
    pub metric: MetricArg,
    /// Comma-separated lags.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub lags: Vec<usize>,
    /// Comma-separated quantile levels (FQA only).
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.5,0.9")]
    pub levels: Vec<f64>,
    /// `reduced` ties each threshold to its level; otherwise a comma-separated list.
    #[arg(long, value_parser = parse_thresholds, default_value = "reduced")]
    pub thresholds: Thresholds,
    /// Replace degenerate FQA coordinates by 0 (with a warning) instead of failing.
    #[arg(long)]
    pub zero_degenerate: bool,
}

impl MetricOpts {
    pub fn spec(&self) -> MetricSpec {
        let mut spec = MetricSpec::new(
            self.metric.into(),
            FqaParams {
                lags: self.lags.clone(),
                levels: self.levels.clone(),
                thresholds: self.thresholds.clone(),
            },
        );
        if self.zero_degenerate {
            spec.degenerate = DegeneratePolicy::Zero;
        }
        spec
    }
}

#[derive(Debug, Clone, Args)]
pub struct SolverOpts {
    #[arg(long, value_enum, default_value = "c-medoids")]
    pub algorithm: AlgorithmArg,
    /// Number of random initialisations.
    #[arg(long, default_value_t = DEFAULT_STARTS)]
    pub starts: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_MAX_ITER)]
    pub max_iter: usize,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=4))]
    pub scenario: u8,
    /// Series length.
    #[arg(short = 'T', long = "len", default_value_t = 200)]
    pub len: usize,
    /// Grid points per curve.
    #[arg(short = 'p', long = "points", default_value_t = 100)]
    pub points: usize,
    /// Draw each length from 200, 300, ..., 600 instead of using -T.
    #[arg(long)]
    pub random_lengths: bool,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct FeaturesArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[command(flatten)]
    pub metric: MetricOpts,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ClusterArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[command(flatten)]
    pub metric: MetricOpts,
    #[command(flatten)]
    pub solver: SolverOpts,
    /// Number of clusters.
    #[arg(short = 'C')]
    pub c: usize,
    /// Fuzziness exponent (> 1).
    #[arg(short = 'm')]
    pub m: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Family-wise significance level of the lag tests.
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Largest lag tested.
    #[arg(long, default_value_t = 5)]
    pub max_lag: usize,
    /// Use this many permutations instead of the t-test approximation.
    #[arg(long)]
    pub permutations: Option<usize>,
    /// Comma-separated quantile levels.
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.5,0.9")]
    pub levels: Vec<f64>,
    #[command(flatten)]
    pub solver: SolverOpts,
    /// Comma-separated grid of cluster counts.
    #[arg(short = 'C', value_delimiter = ',', default_value = "2,3,4,5")]
    pub c: Vec<usize>,
    /// Comma-separated grid of fuzziness exponents.
    #[arg(short = 'm', value_delimiter = ',', default_value = "1.2,1.4,1.6,1.8,2.0")]
    pub m: Vec<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvalMode {
    /// Fuzzy and crisp agreement indices.
    CrispScenario,
    /// Success rule for a two-group collection with one isolated series.
    Uncertain,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Partition JSON written by `cluster`.
    #[arg(long)]
    pub partition: PathBuf,
    /// Manifest whose entries carry the reference labels.
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long, value_enum, default_value = "crisp-scenario")]
    pub mode: EvalMode,
    #[arg(long, default_value_t = 0.7)]
    pub threshold: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct MdsArgs {
    /// Distance JSON written by `features` or `cluster`.
    #[arg(long)]
    pub distances: PathBuf,
    /// Permutations for the stress test; 0 skips the test.
    #[arg(long, default_value_t = 999)]
    pub permutations: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SummarizeArgs {
    #[arg(long)]
    pub partition: PathBuf,
    /// Feature JSON written by `features`.
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReplicateArgs {
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=4))]
    pub scenario: u8,
    #[arg(short = 'T', long = "len", default_value_t = 200)]
    pub len: usize,
    #[arg(short = 'p', long = "points", default_value_t = 100)]
    pub points: usize,
    #[arg(long)]
    pub random_lengths: bool,
    #[arg(long, default_value_t = 50)]
    pub reps: usize,
    #[command(flatten)]
    pub metric: MetricOpts,
    #[command(flatten)]
    pub solver: SolverOpts,
    /// Number of clusters; defaults to 4 for scenarios 1-2 and 2 for 3-4.
    #[arg(short = 'C')]
    pub c: Option<usize>,
    /// Comma-separated grid of fuzziness exponents; defaults to 1.2..2.0
    /// (scenarios 1-2) or 1.1..2.5 (scenarios 3-4).
    #[arg(short = 'm', value_delimiter = ',')]
    pub m: Vec<f64>,
    #[arg(long, default_value_t = 0.7)]
    pub threshold: f64,
    #[arg(long)]
    pub out: PathBuf,
}
