//! Monte-Carlo replication of the benchmark scenarios: simulate, extract
//! features, cluster over a grid of `m` values and score against the truth.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::indices::{ari_ji, arif_jif};
use super::scenario::{area_under_fuzziness_curve, label_indices, uncertain_success};
use crate::clustering::{fuzzy_c_means, fuzzy_c_medoids, Algorithm, FuzzyPartition, SolverConfig};
use crate::dissimilarity::{matrix_from_raw, raw_feature_matrix, scale_features, MetricSpec};
use crate::error::{Error, Result};
use crate::rng::derive_seed;
use crate::simulate::{make_scenario_with, Label, ScenarioOptions};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateConfig {
    pub scenario: u8,
    pub options: ScenarioOptions,
    pub replicates: usize,
    pub metric: MetricSpec,
    pub algorithm: Algorithm,
    #[serde(rename = "C")]
    pub c: usize,
    pub m_grid: Vec<f64>,
    pub n_starts: usize,
    pub max_iter: usize,
    pub tol: f64,
    pub seed: u64,
    /// Membership threshold of the success rule (scenarios with an isolated
    /// series only).
    pub threshold: f64,
}

impl ReplicateConfig {
    /// Replicate `r` simulates from `derive_seed(seed, 2r)` and seeds the
    /// solver with `derive_seed(seed, 2r + 1)`.
    pub fn seeds(&self, r: usize) -> (u64, u64) {
        let r = r as u64;
        (derive_seed(self.seed, 2 * r), derive_seed(self.seed, 2 * r + 1))
    }

    fn check(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::domain("at least one replicate is required"));
        }
        if self.m_grid.is_empty() {
            return Err(Error::domain("empty m grid"));
        }
        if self.m_grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::domain("m values must be strictly increasing"));
        }
        Ok(())
    }
}

/// Per-partition checks of the solver contract.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Largest `|sum_c u_ic - 1|`.
    pub max_row_sum_error: f64,
    /// The returned objective is the smallest over all starts.
    pub best_start_returned: bool,
    /// The C-means objective trace never increases (vacuous for medoids).
    pub monotone_objective: bool,
}

impl Diagnostics {
    pub fn of(p: &FuzzyPartition) -> Self {
        let max_row_sum_error = p
            .memberships
            .iter()
            .map(|r| (r.iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max);
        let best_start_returned = p.start_objectives.iter().all(|&o| p.objective <= o)
            && p.start_objectives.contains(&p.objective);
        let monotone_objective = p
            .objective_trace
            .windows(2)
            .all(|w| w[1] <= w[0] * (1.0 + 1e-12) + 1e-15);
        Self {
            max_row_sum_error,
            best_start_returned,
            monotone_objective,
        }
    }

    pub fn ok(&self) -> bool {
        self.max_row_sum_error <= 1e-9 && self.best_start_returned && self.monotone_objective
    }

    fn merge(self, other: Self) -> Self {
        Self {
            max_row_sum_error: self.max_row_sum_error.max(other.max_row_sum_error),
            best_start_returned: self.best_start_returned && other.best_start_returned,
            monotone_objective: self.monotone_objective && other.monotone_objective,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunScore {
    pub replicate: usize,
    pub m: f64,
    pub arif: f64,
    pub jif: f64,
    pub ari: f64,
    pub ji: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub success: Option<bool>,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MSummary {
    pub m: f64,
    pub mean_arif: f64,
    pub mean_jif: f64,
    pub mean_ari: f64,
    pub mean_ji: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub success_rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateReport {
    pub summary: Vec<MSummary>,
    /// Area under the success-rate curve over `m`, when defined.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fuzziness_area: Option<f64>,
    pub diagnostics: Diagnostics,
    pub runs: Vec<RunScore>,
}

impl ReplicateReport {
    pub fn at(&self, m: f64) -> Option<&MSummary> {
        self.summary.iter().find(|s| s.m == m)
    }
}

fn replicate_once(cfg: &ReplicateConfig, r: usize) -> Result<(Vec<RunScore>, Diagnostics)> {
    let (data_seed, solver_seed) = cfg.seeds(r);
    let data = make_scenario_with(cfg.scenario, &cfg.options, data_seed)?;
    let truth = label_indices(&data.labels);
    let uncertain = data.labels.contains(&Label::Isolated);
    let raw = raw_feature_matrix(&data.series, &cfg.metric)?;
    let d = matches!(cfg.algorithm, Algorithm::Medoids).then(|| matrix_from_raw(&raw, Some(cfg.metric.metric)));
    let x = scale_features(&raw);

    let mut diag = Diagnostics {
        max_row_sum_error: 0.0,
        best_start_returned: true,
        monotone_objective: true,
    };
    let mut out = Vec::with_capacity(cfg.m_grid.len());
    for &m in &cfg.m_grid {
        let solver = SolverConfig {
            c: cfg.c,
            m,
            max_iter: cfg.max_iter,
            n_starts: cfg.n_starts,
            seed: solver_seed,
            tol: cfg.tol,
        };
        let p = match &d {
            Some(d) => fuzzy_c_medoids(d, &solver)?,
            None => fuzzy_c_means(&x, &solver)?,
        };
        diag = diag.merge(Diagnostics::of(&p));
        let fuzzy = arif_jif(&truth, &p.memberships)?;
        let crisp = ari_ji(&truth, &p.memberships)?;
        let success = if uncertain && cfg.c == 2 {
            Some(uncertain_success(&p.memberships, &data.labels, cfg.threshold)?)
        } else {
            None
        };
        out.push(RunScore {
            replicate: r,
            m,
            arif: fuzzy.ari,
            jif: fuzzy.jaccard,
            ari: crisp.ari,
            ji: crisp.jaccard,
            success,
            objective: p.objective,
        });
    }
    Ok((out, diag))
}

/// Runs every replicate (in parallel; results do not depend on scheduling)
/// and averages the scores per `m`.
pub fn run_replicates(cfg: &ReplicateConfig) -> Result<ReplicateReport> {
    cfg.check()?;
    let per_rep: Vec<(Vec<RunScore>, Diagnostics)> = (0..cfg.replicates)
        .into_par_iter()
        .map(|r| replicate_once(cfg, r).map_err(|e| Error::domain(format!("replicate {r}: {e}"))))
        .collect::<Result<_>>()?;

    let mut diagnostics = per_rep[0].1;
    let mut runs = Vec::with_capacity(cfg.replicates * cfg.m_grid.len());
    for (scores, d) in per_rep {
        diagnostics = diagnostics.merge(d);
        runs.extend(scores);
    }
    let n = cfg.replicates as f64;
    let summary: Vec<MSummary> = cfg
        .m_grid
        .iter()
        .map(|&m| {
            let at: Vec<&RunScore> = runs.iter().filter(|s| s.m == m).collect();
            let mean = |f: fn(&RunScore) -> f64| at.iter().map(|s| f(s)).sum::<f64>() / n;
            let success_rate = at[0]
                .success
                .is_some()
                .then(|| at.iter().filter(|s| s.success == Some(true)).count() as f64 / n);
            MSummary {
                m,
                mean_arif: mean(|s| s.arif),
                mean_jif: mean(|s| s.jif),
                mean_ari: mean(|s| s.ari),
                mean_ji: mean(|s| s.ji),
                success_rate,
            }
        })
        .collect();
    let rates: Option<Vec<f64>> = summary.iter().map(|s| s.success_rate).collect();
    let fuzziness_area = match rates {
        Some(r) if r.len() >= 2 => Some(area_under_fuzziness_curve(&cfg.m_grid, &r)?),
        _ => None,
    };
    Ok(ReplicateReport {
        summary,
        fuzziness_area,
        diagnostics,
        runs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dissimilarity::Metric;
    use crate::fqa::FqaParams;

    fn config(scenario: u8, algorithm: Algorithm, c: usize) -> ReplicateConfig {
        ReplicateConfig {
            scenario,
            options: ScenarioOptions::fixed(120, 20),
            replicates: 3,
            metric: MetricSpec::new(Metric::Fqa, FqaParams::default()),
            algorithm,
            c,
            m_grid: vec![1.2, 1.6],
            n_starts: 5,
            max_iter: 500,
            tol: 1e-6,
            seed: 11,
            threshold: 0.7,
        }
    }

    #[test]
    fn summary_averages_runs() {
        let cfg = config(1, Algorithm::Medoids, 4);
        let rep = run_replicates(&cfg).unwrap();
        assert_eq!(rep.runs.len(), 6);
        assert!(rep.diagnostics.ok());
        let s = rep.at(1.6).unwrap();
        let direct: f64 = rep.runs.iter().filter(|r| r.m == 1.6).map(|r| r.arif).sum::<f64>() / 3.0;
        assert!((s.mean_arif - direct).abs() < 1e-15);
        assert!(s.success_rate.is_none() && rep.fuzziness_area.is_none());
    }

    #[test]
    fn uncertain_scenario_reports_success() {
        let mut cfg = config(4, Algorithm::Means, 2);
        cfg.m_grid = vec![1.5, 2.0, 2.5];
        let rep = run_replicates(&cfg).unwrap();
        assert!(rep.summary.iter().all(|s| s.success_rate.is_some()));
        let area = rep.fuzziness_area.unwrap();
        assert!((0.0..=1.0).contains(&area));
        assert!(rep.diagnostics.monotone_objective);
    }

    #[test]
    fn deterministic() {
        let cfg = config(2, Algorithm::Medoids, 4);
        assert_eq!(run_replicates(&cfg).unwrap(), run_replicates(&cfg).unwrap());
    }

    #[test]
    fn rejects_bad_grids() {
        let mut cfg = config(1, Algorithm::Medoids, 4);
        cfg.m_grid = vec![];
        assert!(run_replicates(&cfg).is_err());
        cfg.m_grid = vec![1.6, 1.2];
        assert!(run_replicates(&cfg).is_err());
    }
}
