//! Baseline serial-dependence measures: functional ACF, functional spherical
//! ACF (centred at the spatial median) and functional Kendall autocorrelation
//! under the max and integral pre-orders.
//!
//! Each measure yields one coefficient per lag; the corresponding
//! dissimilarity is `1/(4L) * sum_k (rho1(l_k) - rho2(l_k))^2`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fqa::{check_lags, fqa_distance_from_raw};
use crate::fts::{inner, l2_distance, FunctionalTimeSeries};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preorder {
    /// `f < g` iff `max f < max g`.
    Max,
    /// `f < g` iff `int (g - f) > 0`.
    Integral,
}

impl Preorder {
    pub fn precedes(self, f: &[f64], g: &[f64], weights: &[f64]) -> bool {
        match self {
            Preorder::Max => max_of(f) < max_of(g),
            Preorder::Integral => {
                let diff: f64 = g.iter().zip(f).zip(weights).map(|((a, b), w)| w * (a - b)).sum();
                diff > 0.0
            }
        }
    }
}

fn max_of(f: &[f64]) -> f64 {
    f.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

fn centered_rows(x: &FunctionalTimeSeries, center: &[f64]) -> Vec<Vec<f64>> {
    x.rows()
        .map(|r| r.iter().zip(center).map(|(a, m)| a - m).collect())
        .collect()
}

/// Weighted Gram matrix `G[i][k] = <Y_i, Y_k>_H` of mean-centred curves.
fn centered_gram(x: &FunctionalTimeSeries) -> Vec<Vec<f64>> {
    let w = x.grid().trapezoid_weights();
    let y = centered_rows(x, &x.mean_curve());
    let t = y.len();
    let mut g = vec![vec![0.0; t]; t];
    for i in 0..t {
        for k in i..t {
            let v = inner(&y[i], &y[k], &w);
            g[i][k] = v;
            g[k][i] = v;
        }
    }
    g
}

/// Functional ACF at several lags.
///
/// Uses `int int C_l^2 = T^-2 sum_{i,k} <Y_i, Y_k> <Y_{i+l}, Y_{k+l}>` and
/// `int C_0(u,u) = T^-1 sum_i ||Y_i||^2`, which follow from expanding the
/// lagged covariance kernel under the product trapezoid rule.
pub fn facf_many(x: &FunctionalTimeSeries, lags: &[usize]) -> Result<Vec<f64>> {
    let t = x.len();
    if let Some(&bad) = lags.iter().find(|&&l| l + 2 > t) {
        return Err(Error::domain(format!(
            "FACF lag {bad} out of range for a series of length {t} (need lag <= T-2)"
        )));
    }
    let g = centered_gram(x);
    let tf = t as f64;
    let trace: f64 = (0..t).map(|i| g[i][i]).sum::<f64>() / tf;
    let w = x.grid().trapezoid_weights();
    let raw_power: f64 = x.rows().map(|r| inner(r, r, &w)).sum::<f64>() / tf;
    if !(trace > 1e-14 * raw_power) || trace <= 0.0 {
        return Err(Error::DegenerateVariance(
            "FACF denominator is zero (constant series)".into(),
        ));
    }
    Ok(lags
        .iter()
        .map(|&l| {
            let n = t - l;
            let mut s = 0.0;
            for i in 0..n {
                for k in 0..n {
                    s += g[i][k] * g[i + l][k + l];
                }
            }
            (s.max(0.0)).sqrt() / tf / trace
        })
        .collect())
}

pub fn facf(x: &FunctionalTimeSeries, lag: usize) -> Result<f64> {
    Ok(facf_many(x, &[lag])?[0])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpatialMedianOptions {
    /// Stop when successive iterates differ by less than this in L2.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SpatialMedianOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 10_000,
        }
    }
}

/// Minimiser of `sum_i ||X_i - m||_H` by Weiszfeld iteration with the
/// Vardi-Zhang step at data points. Starts from the mean, so two curves
/// return their midpoint.
pub fn spatial_median(
    curves: &[&[f64]],
    weights: &[f64],
    opts: SpatialMedianOptions,
) -> Result<Vec<f64>> {
    let first = curves
        .first()
        .ok_or_else(|| Error::domain("spatial median of an empty sample"))?;
    let p = first.len();
    if let Some(c) = curves.iter().find(|c| c.len() != p) {
        return Err(Error::Dimension {
            expected: p,
            got: c.len(),
        });
    }
    let n = curves.len() as f64;
    let mut y: Vec<f64> = (0..p).map(|j| curves.iter().map(|c| c[j]).sum::<f64>() / n).collect();

    for _ in 0..opts.max_iter {
        let mut coincident = 0usize;
        let mut wsum = 0.0;
        let mut t_num = vec![0.0; p];
        let mut r = vec![0.0; p];
        for c in curves {
            let d = l2_distance(c, &y, weights);
            if d < 1e-12 {
                coincident += 1;
                continue;
            }
            wsum += 1.0 / d;
            for j in 0..p {
                t_num[j] += c[j] / d;
                r[j] += (c[j] - y[j]) / d;
            }
        }
        if wsum == 0.0 {
            return Ok(y);
        }
        let t_point: Vec<f64> = t_num.iter().map(|v| v / wsum).collect();
        let next = if coincident == 0 {
            t_point
        } else {
            let rn = inner(&r, &r, weights).sqrt();
            let eta = coincident as f64;
            if rn <= eta {
                return Ok(y);
            }
            let a = eta / rn;
            t_point
                .iter()
                .zip(&y)
                .map(|(t, yv)| (1.0 - a) * t + a * yv)
                .collect()
        };
        let step = l2_distance(&next, &y, weights);
        y = next;
        if step < opts.tol {
            return Ok(y);
        }
    }
    Err(Error::Convergence {
        iterations: opts.max_iter,
    })
}

/// Spherical autocorrelations about a fixed centre curve. Centred curves with
/// norm below `1e-12` contribute zero terms.
pub fn fsacf_about(x: &FunctionalTimeSeries, lags: &[usize], center: &[f64]) -> Result<Vec<f64>> {
    let t = x.len();
    if let Some(&bad) = lags.iter().find(|&&l| l == 0 || l >= t) {
        return Err(Error::domain(format!(
            "FSACF lag {bad} out of range for a series of length {t} (need 1 <= lag <= T-1)"
        )));
    }
    let w = x.grid().trapezoid_weights();
    let units: Vec<Option<Vec<f64>>> = centered_rows(x, center)
        .into_iter()
        .map(|y| {
            let norm = inner(&y, &y, &w).sqrt();
            (norm >= 1e-12).then(|| y.iter().map(|v| v / norm).collect())
        })
        .collect();
    if units.iter().all(Option::is_none) {
        return Err(Error::DegenerateVariance(
            "every curve coincides with the spatial median".into(),
        ));
    }
    Ok(lags
        .iter()
        .map(|&l| {
            let s: f64 = (0..t - l)
                .filter_map(|i| match (&units[i], &units[i + l]) {
                    (Some(a), Some(b)) => Some(inner(a, b, &w)),
                    _ => None,
                })
                .sum();
            s / t as f64
        })
        .collect())
}

pub fn fsacf_many(x: &FunctionalTimeSeries, lags: &[usize], opts: SpatialMedianOptions) -> Result<Vec<f64>> {
    let w = x.grid().trapezoid_weights();
    let curves: Vec<&[f64]> = x.rows().collect();
    let center = spatial_median(&curves, &w, opts)?;
    fsacf_about(x, lags, &center)
}

pub fn fsacf(x: &FunctionalTimeSeries, lag: usize) -> Result<f64> {
    Ok(fsacf_many(x, &[lag], SpatialMedianOptions::default())?[0])
}

/// Functional Kendall autocorrelation at several lags. Ties under the
/// pre-order count as neither concordant nor discordant.
pub fn kendall_acf_many(x: &FunctionalTimeSeries, lags: &[usize], preorder: Preorder) -> Result<Vec<f64>> {
    let t = x.len();
    if let Some(&bad) = lags.iter().find(|&&l| l == 0 || l + 3 > t) {
        return Err(Error::domain(format!(
            "Kendall lag {bad} out of range for a series of length {t} (need 1 <= lag <= T-3)"
        )));
    }
    let w = x.grid().trapezoid_weights();
    // before[i * t + j]: curve i precedes curve j
    let mut before = vec![false; t * t];
    for i in 0..t {
        for j in 0..t {
            if i != j {
                before[i * t + j] = preorder.precedes(x.row(i), x.row(j), &w);
            }
        }
    }
    let prec = |i: usize, j: usize| before[i * t + j];
    Ok(lags
        .iter()
        .map(|&l| {
            let n = t - l;
            let mut concordant = 0u64;
            for i in 0..n {
                for j in i + 1..n {
                    if prec(i, j) && prec(i + l, j + l) {
                        concordant += 1;
                    }
                    if prec(j, i) && prec(j + l, i + l) {
                        concordant += 1;
                    }
                }
            }
            let pairs = (n * (n - 1) / 2) as f64;
            2.0 * concordant as f64 / pairs - 1.0
        })
        .collect())
}

pub fn kendall_acf(x: &FunctionalTimeSeries, lag: usize, preorder: Preorder) -> Result<f64> {
    Ok(kendall_acf_many(x, &[lag], preorder)?[0])
}

fn pair_distance(
    x1: &FunctionalTimeSeries,
    x2: &FunctionalTimeSeries,
    lags: &[usize],
    f: impl Fn(&FunctionalTimeSeries, &[usize]) -> Result<Vec<f64>>,
) -> Result<f64> {
    check_lags(lags)?;
    let r1 = f(x1, lags).map_err(|e| e.in_series(0))?;
    let r2 = f(x2, lags).map_err(|e| e.in_series(1))?;
    Ok(fqa_distance_from_raw(&r1, &r2))
}

pub fn d_facf(x1: &FunctionalTimeSeries, x2: &FunctionalTimeSeries, lags: &[usize]) -> Result<f64> {
    pair_distance(x1, x2, lags, facf_many)
}

pub fn d_fsacf(x1: &FunctionalTimeSeries, x2: &FunctionalTimeSeries, lags: &[usize]) -> Result<f64> {
    pair_distance(x1, x2, lags, |x, l| fsacf_many(x, l, SpatialMedianOptions::default()))
}

pub fn d_kendall(
    x1: &FunctionalTimeSeries,
    x2: &FunctionalTimeSeries,
    lags: &[usize],
    preorder: Preorder,
) -> Result<f64> {
    pair_distance(x1, x2, lags, |x, l| kendall_acf_many(x, l, preorder))
}
