//! Fuzzy C-medoids and C-means, the Xie-Beni index and hyperparameter
//! selection.
//!
//! Both solvers share the membership update
//! `u_c = [sum_c' (d_c / d_c')^(1/(m-1))]^(-1)` where `d` holds the
//! dissimilarities of one object to the `C` prototypes.

mod lags;
mod means;
mod medoids;
mod validity;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use lags::{
    distance_correlation_permutation_test, distance_correlation_test, select_lags, DcorMethod, DcorTest,
    LagSelection, DEFAULT_PERMUTATIONS,
};
pub use means::{centroids_from_memberships, fuzzy_c_means, fuzzy_c_means_from};
pub use medoids::{fuzzy_c_medoids, fuzzy_c_medoids_from};
pub use validity::{fit, select_c_m, squared_euclidean_matrix, xie_beni, xie_beni_partition, Selection, SelectionEntry};

pub const DEFAULT_MAX_ITER: usize = 100_000;
pub const DEFAULT_STARTS: usize = 200;
pub const DEFAULT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Medoids,
    Means,
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "medoids" | "c-medoids" => Ok(Algorithm::Medoids),
            "means" | "c-means" => Ok(Algorithm::Means),
            _ => Err(Error::domain(format!("unknown algorithm {s:?} (expected medoids or means)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    #[serde(rename = "C")]
    pub c: usize,
    pub m: f64,
    pub max_iter: usize,
    pub n_starts: usize,
    pub seed: u64,
    /// C-means stopping tolerance on `max |U - U_old|`.
    pub tol: f64,
}

impl SolverConfig {
    pub fn new(c: usize, m: f64) -> Self {
        Self {
            c,
            m,
            max_iter: DEFAULT_MAX_ITER,
            n_starts: DEFAULT_STARTS,
            seed: 0,
            tol: DEFAULT_TOL,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_starts(mut self, n_starts: usize) -> Self {
        self.n_starts = n_starts;
        self
    }

    pub fn check(&self, n: usize) -> Result<()> {
        if self.c < 2 {
            return Err(Error::domain(format!("C must be at least 2, got {}", self.c)));
        }
        if self.c > n {
            return Err(Error::domain(format!("C = {} exceeds the number of objects {n}", self.c)));
        }
        if !(self.m > 1.0 && self.m.is_finite()) {
            return Err(Error::domain(format!("m must be > 1, got {}", self.m)));
        }
        if self.max_iter == 0 || self.n_starts == 0 {
            return Err(Error::domain("max_iter and n_starts must be positive"));
        }
        if !(self.tol > 0.0) {
            return Err(Error::domain(format!("tol must be positive, got {}", self.tol)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Prototypes {
    Medoids(Vec<usize>),
    Centroids(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuzzyPartition {
    #[serde(rename = "C")]
    pub c: usize,
    pub m: f64,
    pub memberships: Vec<Vec<f64>>,
    pub prototypes: Prototypes,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Final objective of every start, in start order.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub start_objectives: Vec<f64>,
    /// Objective after each iteration of the selected run (C-means only).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub objective_trace: Vec<f64>,
}

impl FuzzyPartition {
    pub fn n(&self) -> usize {
        self.memberships.len()
    }

    /// Maximum-membership assignment; ties go to the lowest cluster index.
    pub fn hard_labels(&self) -> Vec<usize> {
        self.memberships.iter().map(|row| argmax(row)).collect()
    }

    pub fn medoids(&self) -> Option<&[usize]> {
        match &self.prototypes {
            Prototypes::Medoids(m) => Some(m),
            Prototypes::Centroids(_) => None,
        }
    }
}

pub(crate) fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (c, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = c;
        }
    }
    best
}

/// Membership degrees of one object given its dissimilarities to the
/// prototypes.
///
/// A single zero dissimilarity gives the crisp vector at that prototype.
/// Several zeros share the membership equally.
pub fn membership_from_distances(d: &[f64], m: f64) -> Result<Vec<f64>> {
    if !(m > 1.0 && m.is_finite()) {
        return Err(Error::domain(format!("m must be > 1, got {m}")));
    }
    if d.is_empty() {
        return Err(Error::domain("empty distance vector"));
    }
    if let Some(v) = d.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(Error::domain(format!("invalid dissimilarity {v}")));
    }
    let mut out = vec![0.0; d.len()];
    memberships_into(d, m, &mut out);
    Ok(out)
}

pub(crate) fn memberships_into(d: &[f64], m: f64, out: &mut [f64]) {
    let zeros = d.iter().filter(|&&v| v == 0.0).count();
    if zeros > 0 {
        if zeros > 1 {
            log::debug!("{zeros} prototypes at zero dissimilarity; sharing membership");
        }
        let share = 1.0 / zeros as f64;
        for (u, &v) in out.iter_mut().zip(d) {
            *u = if v == 0.0 { share } else { 0.0 };
        }
        return;
    }
    let e = 1.0 / (m - 1.0);
    for (c, u) in out.iter_mut().enumerate() {
        let s: f64 = d.iter().map(|&dc2| (d[c] / dc2).powf(e)).sum();
        *u = 1.0 / s;
    }
    let total: f64 = out.iter().sum();
    out.iter_mut().for_each(|u| *u /= total);
}

/// `sum_i sum_c u_ic^m dist(i, c)`
pub(crate) fn objective(u: &[Vec<f64>], m: f64, dist: impl Fn(usize, usize) -> f64) -> f64 {
    u.iter()
        .enumerate()
        .map(|(i, row)| row.iter().enumerate().map(|(c, &v)| v.powf(m) * dist(i, c)).sum::<f64>())
        .sum()
}

/// Lowest objective wins; equal objectives keep the earlier start.
pub(crate) fn best_start<T>(runs: Vec<(f64, T)>) -> (usize, Vec<f64>, T) {
    let objectives: Vec<f64> = runs.iter().map(|r| r.0).collect();
    let mut best = 0;
    for (s, &o) in objectives.iter().enumerate() {
        if o < objectives[best] {
            best = s;
        }
    }
    let run = runs.into_iter().nth(best).map(|r| r.1).expect("at least one start");
    (best, objectives, run)
}
