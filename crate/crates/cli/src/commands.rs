use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context, Result};
use serde::{Deserialize, Serialize};

use ftsclust::clustering::{
    fuzzy_c_means, fuzzy_c_medoids, select_c_m, select_lags, Algorithm, DcorMethod, FuzzyPartition, LagSelection,
    Selection, SolverConfig,
};
use ftsclust::dissimilarity::{matrix_from_raw, raw_feature_matrix, scale_features};
use ftsclust::evaluate::{
    ari_ji, arif_jif, cluster_summary, label_indices, mds_2d, mds_permutation_test, run_replicates, uncertain_success,
    ReplicateConfig, ReplicateReport,
};
use ftsclust::fqa::FeatureKey;
use ftsclust::io::{load_manifest_collection, save_csv, Collection, Manifest, ManifestEntry};
use ftsclust::simulate::{make_scenario_with, Label, Lengths, Process, ScenarioOptions, DEFAULT_BURN_IN, UNEQUAL_LENGTHS};
use ftsclust::{DissimilarityMatrix, FqaParams, Metric, MetricSpec, Thresholds};

use crate::args::{
    ClusterArgs, EvalMode, EvaluateArgs, FeaturesArgs, MdsArgs, ReplicateArgs, SelectArgs, SimulateArgs, SolverOpts,
    SummarizeArgs,
};
use crate::output::{create_dir, read_json, usage, write_json, write_text, Document};

/// Attaches the manifest id to errors raised for one series.
fn with_ids(e: ftsclust::Error, ids: &[String]) -> anyhow::Error {
    match &e {
        ftsclust::Error::Series { index, .. } => {
            let id = ids.get(*index).cloned().unwrap_or_else(|| index.to_string());
            anyhow!("series {id}: {}", e.root())
        }
        _ => e.into(),
    }
}

fn check_spec(spec: &MetricSpec) -> Result<()> {
    if let Err(e) = spec.params.check() {
        return usage(e.to_string());
    }
    Ok(())
}

fn solver_config(opts: &SolverOpts, c: usize, m: f64) -> Result<SolverConfig> {
    let cfg = SolverConfig {
        c,
        m,
        max_iter: opts.max_iter,
        n_starts: opts.starts,
        seed: opts.seed,
        tol: opts.tol,
    };
    if c < 2 {
        return usage(format!("-C must be at least 2, got {c}"));
    }
    if !(m > 1.0 && m.is_finite()) {
        return usage(format!("-m must be greater than 1, got {m}"));
    }
    if opts.starts == 0 || opts.max_iter == 0 {
        return usage("--starts and --max-iter must be positive");
    }
    if !(opts.tol > 0.0) {
        return usage(format!("--tol must be positive, got {}", opts.tol));
    }
    Ok(cfg)
}

fn load(manifest: &Path) -> Result<Collection> {
    load_manifest_collection(manifest, false).with_context(|| format!("loading {}", manifest.display()))
}

fn csv_with_ids(ids: &[String], rows: &[Vec<f64>]) -> String {
    let mut out = String::new();
    for (id, row) in ids.iter().zip(rows) {
        out.push_str(id);
        for v in row {
            out.push(',');
            out.push_str(&v.to_string());
        }
        out.push('\n');
    }
    out
}

// ---- simulate ----

#[derive(Debug, Serialize, Deserialize)]
struct SimulateConfig {
    scenario: u8,
    options: ScenarioOptions,
    seed: u64,
}

#[derive(Debug, Serialize, Deserialize)]
struct SimulatedSeries {
    id: String,
    path: String,
    label: Label,
    len: usize,
    process: Process,
}

#[derive(Debug, Serialize, Deserialize)]
struct SimulateBody {
    series: Vec<SimulatedSeries>,
}

pub fn simulate(a: &SimulateArgs) -> Result<()> {
    if a.points < 3 {
        return usage("-p must be at least 3");
    }
    let lengths = if a.random_lengths {
        Lengths::Random(UNEQUAL_LENGTHS.to_vec())
    } else {
        Lengths::Fixed(a.len)
    };
    let options = ScenarioOptions {
        lengths,
        points: a.points,
        burn_in: DEFAULT_BURN_IN,
    };
    let data = make_scenario_with(a.scenario, &options, a.seed)?;
    create_dir(&a.out)?;
    let mut entries = Vec::new();
    let mut info = Vec::new();
    for (i, x) in data.series.iter().enumerate() {
        let id = format!("series_{:02}", i + 1);
        let file = format!("{id}.csv");
        save_csv(x, a.out.join(&file))?;
        entries.push(ManifestEntry {
            id: id.clone(),
            path: file.clone(),
            label: Some(data.labels[i].to_string()),
        });
        info.push(SimulatedSeries {
            id,
            path: file,
            label: data.labels[i],
            len: x.len(),
            process: data.processes[i],
        });
    }
    let manifest_path = a.out.join("manifest.json");
    Manifest { series: entries }.save(&manifest_path)?;
    println!("wrote {} series and {}", info.len(), manifest_path.display());
    let config = SimulateConfig {
        scenario: a.scenario,
        options,
        seed: a.seed,
    };
    write_json(&a.out.join("simulate.json"), &Document::new(config, SimulateBody { series: info }))
}

// ---- features ----

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeaturesConfig {
    manifest: PathBuf,
    #[serde(flatten)]
    metric: MetricSpec,
}

#[derive(Debug, Serialize, Deserialize)]
struct FeaturesBody {
    ids: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    feature_keys: Vec<FeatureKey>,
    raw: Vec<Vec<f64>>,
    scaled: Vec<Vec<f64>>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct DistanceBody {
    order: Vec<String>,
    values: Vec<Vec<f64>>,
}

fn feature_keys(spec: &MetricSpec) -> Vec<FeatureKey> {
    match spec.metric {
        Metric::Fqa => spec.params.order(),
        _ => Vec::new(),
    }
}

fn write_distances<C: Serialize>(out: &Path, config: C, ids: &[String], d: &DissimilarityMatrix) -> Result<()> {
    write_text(&out.join("distances.csv"), &d.to_csv())?;
    let body = DistanceBody {
        order: ids.to_vec(),
        values: d.rows(),
    };
    write_json(&out.join("distances.json"), &Document::new(config, body))
}

pub fn features(a: &FeaturesArgs) -> Result<()> {
    let spec = a.metric.spec();
    check_spec(&spec)?;
    let coll = load(&a.manifest)?;
    let raw = raw_feature_matrix(&coll.series, &spec).map_err(|e| with_ids(e, &coll.ids))?;
    let scaled = scale_features(&raw);
    let d = matrix_from_raw(&raw, Some(spec.metric));
    create_dir(&a.out)?;
    let config = FeaturesConfig {
        manifest: a.manifest.clone(),
        metric: spec.clone(),
    };
    write_text(&a.out.join("features.csv"), &csv_with_ids(&coll.ids, &scaled))?;
    let body = FeaturesBody {
        ids: coll.ids.clone(),
        feature_keys: feature_keys(&spec),
        raw,
        scaled,
    };
    write_json(&a.out.join("features.json"), &Document::new(config.clone(), body))?;
    write_distances(&a.out, config, &coll.ids, &d)
}

// ---- cluster ----

#[derive(Debug, Serialize, Deserialize)]
struct ClusterConfig {
    manifest: PathBuf,
    metric: MetricSpec,
    algorithm: Algorithm,
    solver: SolverConfig,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct PartitionBody {
    ids: Vec<String>,
    hard_labels: Vec<usize>,
    partition: FuzzyPartition,
}

pub fn cluster(a: &ClusterArgs) -> Result<()> {
    let spec = a.metric.spec();
    check_spec(&spec)?;
    let solver = solver_config(&a.solver, a.c, a.m)?;
    let algorithm: Algorithm = a.solver.algorithm.into();
    let coll = load(&a.manifest)?;
    if a.c > coll.series.len() {
        return usage(format!("-C {} exceeds the number of series {}", a.c, coll.series.len()));
    }
    let raw = raw_feature_matrix(&coll.series, &spec).map_err(|e| with_ids(e, &coll.ids))?;
    let d = matrix_from_raw(&raw, Some(spec.metric));
    let partition = match algorithm {
        Algorithm::Medoids => fuzzy_c_medoids(&d, &solver)?,
        Algorithm::Means => fuzzy_c_means(&scale_features(&raw), &solver)?,
    };
    if !partition.converged {
        log::warn!("best start stopped at the iteration limit ({})", partition.iterations);
    }

    create_dir(&a.out)?;
    let config = ClusterConfig {
        manifest: a.manifest.clone(),
        metric: spec,
        algorithm,
        solver,
    };
    let log = format!(
        "tool={} {}\nmanifest={}\nmetric={}\nlags={:?}\nlevels={:?}\nthresholds={}\nalgorithm={:?}\nC={}\nm={}\n\
         starts={}\nseed={}\nmax_iter={}\ntol={}\nobjective={}\niterations={}\nconverged={}\n",
        env!("CARGO_PKG_NAME"),
        env!("CARGO_PKG_VERSION"),
        a.manifest.display(),
        config.metric.metric,
        config.metric.params.lags,
        config.metric.params.levels,
        match &config.metric.params.thresholds {
            Thresholds::Reduced => "reduced".to_string(),
            Thresholds::Explicit(b) => format!("{b:?}"),
        },
        algorithm,
        solver.c,
        solver.m,
        solver.n_starts,
        solver.seed,
        solver.max_iter,
        solver.tol,
        partition.objective,
        partition.iterations,
        partition.converged,
    );
    write_text(&a.out.join("run.log"), &log)?;
    write_distances(
        &a.out,
        FeaturesConfig {
            manifest: a.manifest.clone(),
            metric: config.metric.clone(),
        },
        &coll.ids,
        &d,
    )?;
    let body = PartitionBody {
        ids: coll.ids,
        hard_labels: partition.hard_labels(),
        partition,
    };
    write_json(&a.out.join("partition.json"), &Document::new(config, body))
}

// ---- select ----

#[derive(Debug, Serialize, Deserialize)]
struct SelectConfig {
    manifest: PathBuf,
    alpha: f64,
    max_lag: usize,
    test: DcorMethod,
    levels: Vec<f64>,
    algorithm: Algorithm,
    solver: SolverConfig,
    #[serde(rename = "C_grid")]
    c_grid: Vec<usize>,
    m_grid: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct SelectBody {
    /// Per-test level `alpha / (n L_max)`.
    corrected_alpha: f64,
    lags: Vec<usize>,
    lag_tests: LagSelection,
    #[serde(rename = "C")]
    c: usize,
    m: f64,
    xie_beni: Selection,
}

pub fn select(a: &SelectArgs) -> Result<()> {
    if a.c.is_empty() || a.m.is_empty() {
        return usage("the C and m grids must not be empty");
    }
    if !(a.alpha > 0.0 && a.alpha < 1.0) {
        return usage(format!("--alpha must lie in (0,1), got {}", a.alpha));
    }
    if a.max_lag == 0 {
        return usage("--max-lag must be at least 1");
    }
    let base = solver_config(&a.solver, a.c[0], a.m[0])?;
    for &c in &a.c {
        solver_config(&a.solver, c, a.m[0])?;
    }
    for &m in &a.m {
        solver_config(&a.solver, a.c[0], m)?;
    }
    let test = match a.permutations {
        Some(k) if k < 99 => return usage(format!("--permutations must be at least 99, got {k}")),
        Some(permutations) => DcorMethod::Permutation {
            permutations,
            seed: a.solver.seed,
        },
        None => DcorMethod::TTest,
    };
    if let Err(e) = FqaParams::reduced(vec![1], a.levels.clone()) {
        return usage(e.to_string());
    }

    let coll = load(&a.manifest)?;
    let lag_tests = select_lags(&coll.series, a.alpha, a.max_lag, test).map_err(|e| with_ids(e, &coll.ids))?;
    println!(
        "corrected alpha = {} / ({} x {}) = {}",
        a.alpha,
        coll.series.len(),
        a.max_lag,
        lag_tests.corrected_alpha
    );
    println!("selected lags {:?}", lag_tests.lags);
    let spec = MetricSpec::new(
        Metric::Fqa,
        FqaParams {
            lags: lag_tests.lags.clone(),
            levels: a.levels.clone(),
            thresholds: Thresholds::Reduced,
        },
    );
    let raw = raw_feature_matrix(&coll.series, &spec).map_err(|e| with_ids(e, &coll.ids))?;
    let algorithm: Algorithm = a.solver.algorithm.into();
    let selection = select_c_m(&scale_features(&raw), algorithm, &a.c, &a.m, &base)?;
    println!("selected C = {}, m = {} (Xie-Beni {})", selection.c, selection.m, selection.xbi);

    create_dir(&a.out)?;
    let config = SelectConfig {
        manifest: a.manifest.clone(),
        alpha: a.alpha,
        max_lag: a.max_lag,
        test,
        levels: a.levels.clone(),
        algorithm,
        solver: base,
        c_grid: a.c.clone(),
        m_grid: a.m.clone(),
    };
    let body = SelectBody {
        corrected_alpha: lag_tests.corrected_alpha,
        lags: lag_tests.lags.clone(),
        c: selection.c,
        m: selection.m,
        lag_tests,
        xie_beni: selection,
    };
    write_json(&a.out.join("selection.json"), &Document::new(config, body))
}

// ---- evaluate ----

#[derive(Debug, Serialize, Deserialize)]
struct EvaluateConfig {
    partition: PathBuf,
    manifest: PathBuf,
    mode: EvalMode,
    #[serde(skip_serializing_if = "Option::is_none")]
    threshold: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct SeriesMembership {
    id: String,
    label: Label,
    memberships: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum EvaluateBody {
    Crisp {
        arif: f64,
        jif: f64,
        ari: f64,
        ji: f64,
    },
    Uncertain {
        success: bool,
        series: Vec<SeriesMembership>,
    },
}

fn manifest_labels(path: &Path, ids: &[String]) -> Result<Vec<Label>> {
    let manifest = Manifest::load(path).with_context(|| format!("loading {}", path.display()))?;
    let manifest_ids: Vec<&String> = manifest.series.iter().map(|e| &e.id).collect();
    if manifest_ids.len() != ids.len() || manifest_ids.iter().zip(ids).any(|(a, b)| *a != b) {
        return usage("the manifest lists different series than the partition");
    }
    manifest
        .series
        .iter()
        .map(|e| {
            let l = e.label.as_deref().ok_or_else(|| anyhow!("series {} has no label", e.id))?;
            l.parse::<Label>().map_err(|err| anyhow!("series {}: {err}", e.id))
        })
        .collect()
}

pub fn evaluate(a: &EvaluateArgs) -> Result<()> {
    let doc: Document<serde_json::Value, PartitionBody> = read_json(&a.partition)?;
    let labels = manifest_labels(&a.manifest, &doc.body.ids)?;
    let u = &doc.body.partition.memberships;
    let body = match a.mode {
        EvalMode::CrispScenario => {
            let truth = label_indices(&labels);
            let fuzzy = arif_jif(&truth, u)?;
            let crisp = ari_ji(&truth, u)?;
            println!(
                "ARIF {:.4}  JIF {:.4}  ARI {:.4}  JI {:.4}",
                fuzzy.ari, fuzzy.jaccard, crisp.ari, crisp.jaccard
            );
            EvaluateBody::Crisp {
                arif: fuzzy.ari,
                jif: fuzzy.jaccard,
                ari: crisp.ari,
                ji: crisp.jaccard,
            }
        }
        EvalMode::Uncertain => {
            if !(a.threshold > 0.0 && a.threshold < 1.0) {
                return usage(format!("--threshold must lie in (0,1), got {}", a.threshold));
            }
            let success = uncertain_success(u, &labels, a.threshold)?;
            println!("success: {success}");
            EvaluateBody::Uncertain {
                success,
                series: doc
                    .body
                    .ids
                    .iter()
                    .zip(&labels)
                    .zip(u)
                    .map(|((id, l), row)| SeriesMembership {
                        id: id.clone(),
                        label: *l,
                        memberships: row.clone(),
                    })
                    .collect(),
            }
        }
    };
    create_dir(&a.out)?;
    let config = EvaluateConfig {
        partition: a.partition.clone(),
        manifest: a.manifest.clone(),
        mode: a.mode,
        threshold: (a.mode == EvalMode::Uncertain).then_some(a.threshold),
    };
    write_json(&a.out.join("evaluation.json"), &Document::new(config, body))
}

// ---- mds ----

#[derive(Debug, Serialize, Deserialize)]
struct MdsConfig {
    distances: PathBuf,
    permutations: usize,
    seed: u64,
}

#[derive(Debug, Serialize, Deserialize)]
struct MdsBody {
    ids: Vec<String>,
    coords: Vec<[f64; 2]>,
    eigenvalues: [f64; 2],
    stress: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    p_value: Option<f64>,
}

pub fn mds(a: &MdsArgs) -> Result<()> {
    if a.permutations != 0 && a.permutations < 99 {
        return usage(format!("--permutations must be 0 or at least 99, got {}", a.permutations));
    }
    let doc: Document<serde_json::Value, DistanceBody> = read_json(&a.distances)?;
    let d = DissimilarityMatrix::new(doc.body.values, None)?;
    let fit = mds_2d(&d)?;
    let p_value = if a.permutations > 0 {
        Some(mds_permutation_test(&d, a.permutations, a.seed)?)
    } else {
        None
    };
    println!("stress {:.4}{}", fit.stress, p_value.map(|p| format!("  p = {p:.4}")).unwrap_or_default());
    create_dir(&a.out)?;
    let mut csv = String::from("id,x,y\n");
    for (id, c) in doc.body.order.iter().zip(&fit.coords) {
        csv.push_str(&format!("{id},{},{}\n", c[0], c[1]));
    }
    write_text(&a.out.join("coords.csv"), &csv)?;
    let config = MdsConfig {
        distances: a.distances.clone(),
        permutations: a.permutations,
        seed: a.seed,
    };
    let body = MdsBody {
        ids: doc.body.order,
        coords: fit.coords,
        eigenvalues: fit.eigenvalues,
        stress: fit.stress,
        p_value,
    };
    write_json(&a.out.join("mds.json"), &Document::new(config, body))
}

// ---- summarize ----

#[derive(Debug, Serialize, Deserialize)]
struct SummarizeConfig {
    partition: PathBuf,
    features: PathBuf,
}

#[derive(Debug, Serialize, Deserialize)]
struct ClusterProfile {
    cluster: usize,
    total_membership: f64,
    mean_features: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct SummaryBody {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    feature_keys: Vec<FeatureKey>,
    clusters: Vec<ClusterProfile>,
}

pub fn summarize(a: &SummarizeArgs) -> Result<()> {
    let part: Document<serde_json::Value, PartitionBody> = read_json(&a.partition)?;
    let feats: Document<FeaturesConfig, FeaturesBody> = read_json(&a.features)?;
    if part.body.ids != feats.body.ids {
        return usage("the partition and the feature file list different series");
    }
    let u = &part.body.partition.memberships;
    let means = cluster_summary(&feats.body.raw, u)?;
    let clusters = means
        .into_iter()
        .enumerate()
        .map(|(c, mean_features)| ClusterProfile {
            cluster: c,
            total_membership: u.iter().map(|r| r[c]).sum(),
            mean_features,
        })
        .collect();
    create_dir(&a.out)?;
    let config = SummarizeConfig {
        partition: a.partition.clone(),
        features: a.features.clone(),
    };
    let body = SummaryBody {
        feature_keys: feats.body.feature_keys,
        clusters,
    };
    write_json(&a.out.join("summary.json"), &Document::new(config, body))
}

// ---- replicate ----

pub fn replicate(a: &ReplicateArgs) -> Result<()> {
    let spec = a.metric.spec();
    check_spec(&spec)?;
    let uncertain = a.scenario >= 3;
    let c = a.c.unwrap_or(if uncertain { 2 } else { 4 });
    let m_grid = if a.m.is_empty() {
        if uncertain {
            (11..=25).map(|k| f64::from(k) / 10.0).collect()
        } else {
            vec![1.2, 1.4, 1.6, 1.8, 2.0]
        }
    } else {
        a.m.clone()
    };
    for &m in &m_grid {
        solver_config(&a.solver, c, m)?;
    }
    if m_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return usage("-m values must be strictly increasing");
    }
    if a.reps == 0 {
        return usage("--reps must be positive");
    }
    let config = ReplicateConfig {
        scenario: a.scenario,
        options: ScenarioOptions {
            lengths: if a.random_lengths {
                Lengths::Random(UNEQUAL_LENGTHS.to_vec())
            } else {
                Lengths::Fixed(a.len)
            },
            points: a.points,
            burn_in: DEFAULT_BURN_IN,
        },
        replicates: a.reps,
        metric: spec,
        algorithm: a.solver.algorithm.into(),
        c,
        m_grid,
        n_starts: a.solver.starts,
        max_iter: a.solver.max_iter,
        tol: a.solver.tol,
        seed: a.solver.seed,
        threshold: a.threshold,
    };
    let report: ReplicateReport = run_replicates(&config)?;

    let mut csv = String::from("m,mean_arif,mean_jif,mean_ari,mean_ji,success_rate\n");
    for s in &report.summary {
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            s.m,
            s.mean_arif,
            s.mean_jif,
            s.mean_ari,
            s.mean_ji,
            s.success_rate.map(|r| r.to_string()).unwrap_or_default()
        ));
        match s.success_rate {
            Some(r) => println!("m={:<4} success {:.3}  ARIF {:.3}", s.m, r, s.mean_arif),
            None => println!("m={:<4} ARIF {:.3} (JIF {:.3})", s.m, s.mean_arif, s.mean_jif),
        }
    }
    if let Some(area) = report.fuzziness_area {
        println!("area under the fuzziness curve {area:.4}");
    }
    create_dir(&a.out)?;
    write_text(&a.out.join("replicate.csv"), &csv)?;
    write_json(&a.out.join("replicate.json"), &Document::new(config, report))
}
