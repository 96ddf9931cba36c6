//! Lag selection through a distance-correlation test of serial independence.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::fts::FunctionalTimeSeries;
use crate::rng::stream;

pub const DEFAULT_PERMUTATIONS: usize = 999;
const MIN_PAIRS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DcorTest {
    /// Bias-corrected distance correlation.
    pub r_star: f64,
    /// t statistic, or `r_star` itself for the permutation test.
    pub statistic: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum DcorMethod {
    TTest,
    Permutation { permutations: usize, seed: u64 },
}

/// U-centred distance matrix (zero diagonal).
fn u_centre(a: &[f64], n: usize) -> Vec<f64> {
    let row: Vec<f64> = (0..n).map(|i| a[i * n..(i + 1) * n].iter().sum()).collect();
    let total: f64 = row.iter().sum();
    let (k1, k2) = ((n - 2) as f64, ((n - 1) * (n - 2)) as f64);
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                out[i * n + j] = a[i * n + j] - row[i] / k1 - row[j] / k1 + total / k2;
            }
        }
    }
    out
}

/// `(A . B) = sum_{i != j} A_ij B_ij / (n (n - 3))`
fn u_product(a: &[f64], b: &[f64], n: usize) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() / (n * (n - 3)) as f64
}

fn u_product_permuted(a: &[f64], b: &[f64], perm: &[usize], n: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..n {
        let (pi, ra) = (perm[i], &a[i * n..(i + 1) * n]);
        for j in 0..n {
            s += ra[j] * b[pi * n + perm[j]];
        }
    }
    s / (n * (n - 3)) as f64
}

struct Centred {
    a: Vec<f64>,
    b: Vec<f64>,
    aa: f64,
    bb: f64,
    n: usize,
}

fn centred(da: &[f64], db: &[f64], n: usize) -> Result<Centred> {
    if n < MIN_PAIRS {
        return Err(Error::domain(format!("distance correlation needs at least {MIN_PAIRS} pairs, got {n}")));
    }
    let (a, b) = (u_centre(da, n), u_centre(db, n));
    let (aa, bb) = (u_product(&a, &a, n), u_product(&b, &b, n));
    if !(aa > 0.0 && bb > 0.0) {
        return Err(Error::DegenerateVariance(
            "a sample has zero distance variance (all curves equal)".into(),
        ));
    }
    Ok(Centred { a, b, aa, bb, n })
}

fn t_test(c: &Centred) -> Result<DcorTest> {
    let n = c.n as f64;
    let r = u_product(&c.a, &c.b, c.n) / (c.aa * c.bb).sqrt();
    let v = n * (n - 3.0) / 2.0;
    let df = v - 1.0;
    let denom = 1.0 - r * r;
    let statistic = if denom <= 0.0 {
        f64::INFINITY.copysign(r)
    } else {
        df.sqrt() * r / denom.sqrt()
    };
    let p_value = if statistic.is_infinite() {
        if statistic > 0.0 { 0.0 } else { 1.0 }
    } else {
        StudentsT::new(0.0, 1.0, df)
            .map_err(|e| Error::domain(e.to_string()))?
            .sf(statistic)
    };
    Ok(DcorTest {
        r_star: r,
        statistic,
        p_value,
    })
}

fn permutation_test(c: &Centred, permutations: usize, seed: u64) -> DcorTest {
    let norm = (c.aa * c.bb).sqrt();
    let r = u_product(&c.a, &c.b, c.n) / norm;
    let mut rng = stream(seed, 0);
    let mut perm: Vec<usize> = (0..c.n).collect();
    let mut hits = 0;
    for _ in 0..permutations {
        perm.shuffle(&mut rng);
        if u_product_permuted(&c.a, &c.b, &perm, c.n) / norm >= r {
            hits += 1;
        }
    }
    DcorTest {
        r_star: r,
        statistic: r,
        p_value: (1 + hits) as f64 / (permutations + 1) as f64,
    }
}

fn l2_matrix(curves: &[&[f64]], w: &[f64]) -> Vec<f64> {
    let n = curves.len();
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let d: f64 = curves[i]
                .iter()
                .zip(curves[j])
                .zip(w)
                .map(|((a, b), w)| w * (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            out[i * n + j] = d;
            out[j * n + i] = d;
        }
    }
    out
}

fn check_pairs(x: &[&[f64]], y: &[&[f64]], w: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::Dimension {
            expected: x.len(),
            got: y.len(),
        });
    }
    if let Some(c) = x.iter().chain(y).find(|c| c.len() != w.len()) {
        return Err(Error::Dimension {
            expected: w.len(),
            got: c.len(),
        });
    }
    Ok(())
}

/// Bias-corrected distance-correlation t-test of independence between paired
/// curves, with L2 distances under quadrature weights `w`. One-sided: large
/// `R*` is evidence of dependence.
pub fn distance_correlation_test(x: &[&[f64]], y: &[&[f64]], w: &[f64]) -> Result<DcorTest> {
    check_pairs(x, y, w)?;
    t_test(&centred(&l2_matrix(x, w), &l2_matrix(y, w), x.len())?)
}

/// Permutation version: `p = (1 + #{R*_perm >= R*}) / (permutations + 1)`.
pub fn distance_correlation_permutation_test(
    x: &[&[f64]],
    y: &[&[f64]],
    w: &[f64],
    permutations: usize,
    seed: u64,
) -> Result<DcorTest> {
    check_pairs(x, y, w)?;
    let c = centred(&l2_matrix(x, w), &l2_matrix(y, w), x.len())?;
    Ok(permutation_test(&c, permutations, seed))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagSelection {
    pub lags: Vec<usize>,
    /// Most significant rejected lag of each series.
    pub per_series: Vec<Option<usize>>,
    /// `p_values[i][l - 1]` for series `i` and lag `l`.
    pub p_values: Vec<Vec<f64>>,
    pub corrected_alpha: f64,
}

/// Tests every series at lags `1..=l_max` at the Bonferroni level
/// `alpha / (n l_max)`. Each series contributes its most significant rejected
/// lag (smallest p-value, then largest statistic, then smallest lag); the
/// result is `{1, ..., max}` over series, or `{1}` when nothing is rejected.
pub fn select_lags(
    collection: &[FunctionalTimeSeries],
    alpha: f64,
    l_max: usize,
    method: DcorMethod,
) -> Result<LagSelection> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::domain(format!("alpha must lie in (0,1), got {alpha}")));
    }
    if l_max == 0 {
        return Err(Error::domain("L_max must be at least 1"));
    }
    if collection.is_empty() {
        return Err(Error::domain("empty collection"));
    }
    for (i, x) in collection.iter().enumerate() {
        if x.len() <= l_max + 3 || x.len() - l_max < MIN_PAIRS {
            return Err(Error::domain(format!(
                "series length {} too short for L_max = {l_max}",
                x.len()
            ))
            .in_series(i));
        }
    }
    let corrected = alpha / (collection.len() * l_max) as f64;

    let tests: Vec<Vec<DcorTest>> = collection
        .par_iter()
        .enumerate()
        .map(|(i, x)| series_tests(x, l_max, method, i as u64).map_err(|e| e.in_series(i)))
        .collect::<Result<_>>()?;

    let per_series: Vec<Option<usize>> = tests
        .iter()
        .map(|t| {
            t.iter()
                .enumerate()
                .filter(|(_, r)| r.p_value < corrected)
                .min_by(|a, b| {
                    a.1.p_value
                        .total_cmp(&b.1.p_value)
                        .then(b.1.statistic.total_cmp(&a.1.statistic))
                        .then(a.0.cmp(&b.0))
                })
                .map(|(k, _)| k + 1)
        })
        .collect();
    let top = per_series.iter().flatten().copied().max().unwrap_or(1);
    Ok(LagSelection {
        lags: (1..=top).collect(),
        per_series,
        p_values: tests.iter().map(|t| t.iter().map(|r| r.p_value).collect()).collect(),
        corrected_alpha: corrected,
    })
}

fn series_tests(x: &FunctionalTimeSeries, l_max: usize, method: DcorMethod, index: u64) -> Result<Vec<DcorTest>> {
    let t = x.len();
    let w = x.grid().trapezoid_weights();
    let rows: Vec<&[f64]> = x.rows().collect();
    // one full distance matrix; each lag uses two of its diagonal blocks
    let full = l2_matrix(&rows, &w);
    (1..=l_max)
        .map(|l| {
            let n = t - l;
            let block = |off: usize| -> Vec<f64> {
                let mut out = Vec::with_capacity(n * n);
                for i in 0..n {
                    out.extend_from_slice(&full[(i + off) * t + off..(i + off) * t + off + n]);
                }
                out
            };
            let c = centred(&block(0), &block(l), n)?;
            match method {
                DcorMethod::TTest => t_test(&c),
                DcorMethod::Permutation { permutations, seed } => Ok(permutation_test(
                    &c,
                    permutations,
                    crate::rng::derive_seed(seed, index * 1_000 + l as u64),
                )),
            }
        })
        .collect()
}
