//! Feature extraction per metric and pairwise dissimilarity matrices.
//!
//! Every supported metric is feature based: a series maps to a vector of `K`
//! raw coefficients and the dissimilarity is `1/(4K) * sum (r1 - r2)^2`.
//! Scaling raw features by `1/sqrt(4K)` turns that into squared Euclidean
//! distance, which is what the C-means solver and the Xie-Beni index use.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::competitors::{facf_many, fsacf_many, kendall_acf_many, Preorder, SpatialMedianOptions};
use crate::error::{Error, Result};
use crate::fqa::{fqa_distance_from_raw, raw_features_with, DegeneratePolicy, FqaParams};
use crate::fts::FunctionalTimeSeries;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Metric {
    #[serde(rename = "FQA")]
    Fqa,
    #[serde(rename = "FACF")]
    Facf,
    #[serde(rename = "FSACF")]
    Fsacf,
    #[serde(rename = "K_m")]
    KendallMax,
    #[serde(rename = "K_i")]
    KendallIntegral,
}

impl Metric {
    pub const ALL: [Metric; 5] = [
        Metric::Fqa,
        Metric::Facf,
        Metric::Fsacf,
        Metric::KendallMax,
        Metric::KendallIntegral,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Fqa => "FQA",
            Metric::Facf => "FACF",
            Metric::Fsacf => "FSACF",
            Metric::KendallMax => "K_m",
            Metric::KendallIntegral => "K_i",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Metric::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::domain(format!("unknown metric {s:?} (expected FQA, FACF, FSACF, K_m or K_i)")))
    }
}

/// A metric together with its parameters. Competitor metrics use only the lags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSpec {
    pub metric: Metric,
    #[serde(flatten)]
    pub params: FqaParams,
    #[serde(default)]
    pub degenerate: DegeneratePolicy,
}

impl MetricSpec {
    pub fn new(metric: Metric, params: FqaParams) -> Self {
        Self {
            metric,
            params,
            degenerate: DegeneratePolicy::Error,
        }
    }

    pub fn n_features(&self) -> usize {
        match self.metric {
            Metric::Fqa => self.params.n_features(),
            _ => self.params.lags.len(),
        }
    }
}

/// Unscaled coefficients of one series under a metric.
pub fn raw_series_features(x: &FunctionalTimeSeries, spec: &MetricSpec) -> Result<Vec<f64>> {
    let lags = &spec.params.lags;
    match spec.metric {
        Metric::Fqa => raw_features_with(x, &spec.params, spec.degenerate).map(|(v, _)| v),
        Metric::Facf => facf_many(x, lags),
        Metric::Fsacf => fsacf_many(x, lags, SpatialMedianOptions::default()),
        Metric::KendallMax => kendall_acf_many(x, lags, Preorder::Max),
        Metric::KendallIntegral => kendall_acf_many(x, lags, Preorder::Integral),
    }
}

/// Raw features of every series, evaluated in parallel.
pub fn raw_feature_matrix(collection: &[FunctionalTimeSeries], spec: &MetricSpec) -> Result<Vec<Vec<f64>>> {
    spec.params.check()?;
    collection
        .par_iter()
        .enumerate()
        .map(|(i, x)| raw_series_features(x, spec).map_err(|e| e.in_series(i)))
        .collect()
}

/// Scales raw features so squared Euclidean distance equals the dissimilarity.
pub fn scale_features(raw: &[Vec<f64>]) -> Vec<Vec<f64>> {
    raw.iter()
        .map(|r| {
            let s = 1.0 / (4.0 * r.len() as f64).sqrt();
            r.iter().map(|v| v * s).collect()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DissimilarityMatrix {
    metric: Option<Metric>,
    n: usize,
    values: Vec<f64>,
}

impl DissimilarityMatrix {
    /// Validates a square, symmetric, nonnegative matrix with zero diagonal.
    pub fn new(rows: Vec<Vec<f64>>, metric: Option<Metric>) -> Result<Self> {
        let n = rows.len();
        let mut values = Vec::with_capacity(n * n);
        for row in &rows {
            if row.len() != n {
                return Err(Error::Dimension {
                    expected: n,
                    got: row.len(),
                });
            }
            values.extend_from_slice(row);
        }
        for i in 0..n {
            if values[i * n + i] != 0.0 {
                return Err(Error::domain(format!("nonzero diagonal at {i}")));
            }
            for j in 0..n {
                let v = values[i * n + j];
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::domain(format!("invalid dissimilarity {v} at ({i},{j})")));
                }
                if v != values[j * n + i] {
                    return Err(Error::domain(format!("asymmetric entries at ({i},{j})")));
                }
            }
        }
        Ok(Self { metric, n, values })
    }

    /// `D(i,j) = dist(i,j)` for `i < j`, mirrored.
    pub fn from_fn(n: usize, metric: Option<Metric>, mut dist: impl FnMut(usize, usize) -> f64) -> Self {
        let mut values = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let d = dist(i, j);
                values[i * n + j] = d;
                values[j * n + i] = d;
            }
        }
        Self { metric, n, values }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn metric(&self) -> Option<Metric> {
        self.metric
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.values.chunks(self.n).map(<[f64]>::to_vec).collect()
    }

    /// Reorders rows and columns: entry `(a, b)` of the result is `(perm[a], perm[b])`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        Self::from_fn(self.n, self.metric, |a, b| self.get(perm[a], perm[b]))
    }

    pub fn to_csv(&self) -> String {
        crate::io::matrix_to_csv(self.values.chunks(self.n))
    }
}

/// Serialized form: `{"params": ..., "order": [...], "values": [[...]]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixDocument {
    pub params: MetricSpec,
    pub order: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

impl MatrixDocument {
    pub fn to_matrix(&self) -> Result<DissimilarityMatrix> {
        DissimilarityMatrix::new(self.values.clone(), Some(self.params.metric))
    }
}

/// Dissimilarity matrix from precomputed raw features.
pub fn matrix_from_raw(raw: &[Vec<f64>], metric: Option<Metric>) -> DissimilarityMatrix {
    DissimilarityMatrix::from_fn(raw.len(), metric, |i, j| fqa_distance_from_raw(&raw[i], &raw[j]))
}

/// All pairwise dissimilarities of a collection. Features are computed once
/// per series; a failing series aborts the whole computation.
pub fn pairwise_matrix(collection: &[FunctionalTimeSeries], spec: &MetricSpec) -> Result<DissimilarityMatrix> {
    if collection.len() < 2 {
        return Err(Error::domain("a dissimilarity matrix needs at least 2 series"));
    }
    let raw = raw_feature_matrix(collection, spec)?;
    Ok(matrix_from_raw(&raw, Some(spec.metric)))
}
