//! Functional time series on a common discrete grid.
//!
//! A series of length `T` observed at `p` grid points is stored as a row-major
//! `T x p` matrix; row `t` is the curve at time `t`. All integrals over the
//! domain use the composite trapezoid rule on the stored grid.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ordered evaluation points in `[0, 1]`, starting at 0 and ending at 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Grid {
    points: Vec<f64>,
}

impl Grid {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::domain(format!(
                "a grid needs at least 2 points, got {}",
                points.len()
            )));
        }
        if points[0] != 0.0 || points[points.len() - 1] != 1.0 {
            return Err(Error::domain("grid must start at 0 and end at 1"));
        }
        if points.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::domain("grid points must be strictly increasing"));
        }
        Ok(Self { points })
    }

    /// `p` evenly spaced points on `[0, 1]`.
    pub fn uniform(p: usize) -> Result<Self> {
        if p < 2 {
            return Err(Error::domain(format!("a grid needs at least 2 points, got {p}")));
        }
        let last = (p - 1) as f64;
        let points = (0..p).map(|j| j as f64 / last).collect();
        Ok(Self { points })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// Composite trapezoid weights: `sum_j w_j f(u_j)` approximates `int_0^1 f`.
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let u = &self.points;
        let p = u.len();
        (0..p)
            .map(|j| {
                let left = if j > 0 { u[j] - u[j - 1] } else { 0.0 };
                let right = if j + 1 < p { u[j + 1] - u[j] } else { 0.0 };
                0.5 * (left + right)
            })
            .collect()
    }
}

impl TryFrom<Vec<f64>> for Grid {
    type Error = Error;

    fn try_from(points: Vec<f64>) -> Result<Self> {
        Grid::new(points)
    }
}

impl From<Grid> for Vec<f64> {
    fn from(g: Grid) -> Self {
        g.points
    }
}

/// Weighted L2 inner product `<f, g>_H` under trapezoid weights.
pub fn inner(f: &[f64], g: &[f64], weights: &[f64]) -> f64 {
    f.iter()
        .zip(g)
        .zip(weights)
        .map(|((a, b), w)| w * a * b)
        .sum()
}

/// `||f - g||_H` under trapezoid weights.
pub fn l2_distance(f: &[f64], g: &[f64], weights: &[f64]) -> f64 {
    f.iter()
        .zip(g)
        .zip(weights)
        .map(|((a, b), w)| w * (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalTimeSeries {
    values: Vec<f64>,
    len: usize,
    grid: Grid,
}

impl FunctionalTimeSeries {
    /// Builds a series from row-major values. Rejects non-finite entries.
    pub fn new(values: Vec<f64>, grid: Grid) -> Result<Self> {
        let p = grid.len();
        if values.is_empty() {
            return Err(Error::domain("a functional time series needs at least one curve"));
        }
        if values.len() % p != 0 {
            return Err(Error::Dimension {
                expected: p * (values.len() / p + 1),
                got: values.len(),
            });
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidEntry {
                row: k / p,
                col: k % p,
                value: values[k],
                reason: "non-finite value",
            });
        }
        let len = values.len() / p;
        Ok(Self { values, len, grid })
    }

    /// Builds a series from curves on an evenly spaced grid.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let p = rows.first().map(Vec::len).unwrap_or(0);
        let grid = Grid::uniform(p)?;
        let mut values = Vec::with_capacity(rows.len() * p);
        for row in rows {
            if row.len() != p {
                return Err(Error::Dimension {
                    expected: p,
                    got: row.len(),
                });
            }
            values.extend_from_slice(row);
        }
        Self::new(values, grid)
    }

    /// Number of curves `T`.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Number of grid points `p`.
    pub fn n_points(&self) -> usize {
        self.grid.len()
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, t: usize) -> &[f64] {
        let p = self.n_points();
        &self.values[t * p..(t + 1) * p]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.n_points())
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    /// Pointwise sample mean curve.
    pub fn mean_curve(&self) -> Vec<f64> {
        let p = self.n_points();
        let mut mean = vec![0.0; p];
        for row in self.rows() {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        let n = self.len as f64;
        mean.iter_mut().for_each(|m| *m /= n);
        mean
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(
            self.values.iter().map(|v| v * factor).collect(),
            self.grid.clone(),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileCurve {
    pub level: f64,
    pub values: Vec<f64>,
}

/// Lower empirical quantile of a sample: the `ceil(tau * n)`-th order statistic.
pub fn lower_quantile(sample: &mut [f64], tau: f64) -> f64 {
    let n = sample.len();
    let k = ((tau * n as f64).ceil() as usize).clamp(1, n);
    let (_, kth, _) = sample.select_nth_unstable_by(k - 1, |a, b| a.total_cmp(b));
    *kth
}

/// Pointwise lower empirical quantile curve of level `tau`.
pub fn empirical_quantile_curve(x: &FunctionalTimeSeries, tau: f64) -> Result<QuantileCurve> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::domain(format!("quantile level must lie in (0,1), got {tau}")));
    }
    let values = (0..x.n_points())
        .map(|j| lower_quantile(&mut x.column(j), tau))
        .collect();
    Ok(QuantileCurve { level: tau, values })
}

/// Fraction of grid points where `curve <= q` (ties count as below).
pub fn below_fraction(curve: &[f64], q: &QuantileCurve) -> Result<f64> {
    if curve.len() != q.values.len() {
        return Err(Error::Dimension {
            expected: q.values.len(),
            got: curve.len(),
        });
    }
    let below = curve.iter().zip(&q.values).filter(|(c, q)| c <= q).count();
    Ok(below as f64 / curve.len() as f64)
}

/// Intraday log-returns `ln P(u_j) - ln P(u_{j-1})`, re-gridded on `p - 1`
/// evenly spaced points.
pub fn log_returns(prices: &FunctionalTimeSeries) -> Result<FunctionalTimeSeries> {
    let p = prices.n_points();
    let grid = Grid::uniform(p - 1)?;
    let mut out = Vec::with_capacity(prices.len() * (p - 1));
    for (t, row) in prices.rows().enumerate() {
        if let Some(j) = row.iter().position(|&v| v <= 0.0) {
            return Err(Error::InvalidEntry {
                row: t,
                col: j,
                value: row[j],
                reason: "price must be strictly positive",
            });
        }
        out.extend(row.windows(2).map(|w| w[1].ln() - w[0].ln()));
    }
    FunctionalTimeSeries::new(out, grid)
}

/// Mortality improvement rates `2 (M_{t-1} - M_t) / (M_{t-1} + M_t)`.
pub fn improvement_rates(mortality: &FunctionalTimeSeries) -> Result<FunctionalTimeSeries> {
    if mortality.len() < 2 {
        return Err(Error::domain("improvement rates need at least 2 curves"));
    }
    let p = mortality.n_points();
    if let Some(k) = mortality.values().iter().position(|&v| v <= 0.0) {
        return Err(Error::InvalidEntry {
            row: k / p,
            col: k % p,
            value: mortality.values()[k],
            reason: "mortality rate must be strictly positive",
        });
    }
    let mut out = Vec::with_capacity((mortality.len() - 1) * p);
    for t in 1..mortality.len() {
        let prev = mortality.row(t - 1);
        let cur = mortality.row(t);
        out.extend(prev.iter().zip(cur).map(|(a, b)| 2.0 * (a - b) / (a + b)));
    }
    FunctionalTimeSeries::new(out, mortality.grid().clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn column_series(col: &[f64]) -> FunctionalTimeSeries {
        let rows: Vec<Vec<f64>> = col.iter().map(|&v| vec![v, v]).collect();
        FunctionalTimeSeries::from_rows(&rows).unwrap()
    }

    #[test]
    fn quantile_is_lower_order_statistic() {
        let q = empirical_quantile_curve(&column_series(&[3.0, 1.0, 2.0]), 0.5).unwrap();
        assert_eq!(q.values, vec![2.0, 2.0]);
        let q = empirical_quantile_curve(&column_series(&[1.0, 2.0, 3.0, 4.0]), 0.25).unwrap();
        assert_eq!(q.values, vec![1.0, 1.0]);
        let q = empirical_quantile_curve(&column_series(&[7.5; 5]), 0.9).unwrap();
        assert_eq!(q.values, vec![7.5, 7.5]);
    }

    #[test]
    fn quantile_level_out_of_range() {
        let x = column_series(&[1.0, 2.0]);
        assert!(empirical_quantile_curve(&x, 0.0).is_err());
        assert!(empirical_quantile_curve(&x, 1.0).is_err());
    }

    #[test]
    fn below_fraction_cases() {
        let q = QuantileCurve {
            level: 0.5,
            values: vec![1.0, 2.0, 3.0, 4.0],
        };
        assert_eq!(below_fraction(&[1.0, 2.0, 3.0, 4.0], &q).unwrap(), 1.0);
        assert_eq!(below_fraction(&[2.0, 3.0, 4.0, 5.0], &q).unwrap(), 0.0);
        assert_eq!(below_fraction(&[0.0, 2.0, 2.5, 5.0], &q).unwrap(), 0.75);
        assert!(matches!(
            below_fraction(&[0.0], &q),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn rejects_non_finite() {
        let err = FunctionalTimeSeries::from_rows(&[vec![0.0, 1.0], vec![f64::NAN, 0.0]]);
        assert!(matches!(err, Err(Error::InvalidEntry { row: 1, col: 0, .. })));
    }

    #[test]
    fn grid_validation() {
        assert!(Grid::new(vec![0.0, 0.5, 1.0]).is_ok());
        assert!(Grid::new(vec![0.0]).is_err());
        assert!(Grid::new(vec![0.1, 1.0]).is_err());
        assert!(Grid::new(vec![0.0, 0.6, 0.5, 1.0]).is_err());
        let w = Grid::uniform(5).unwrap().trapezoid_weights();
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert_eq!(w[0], 0.125);
    }

    #[test]
    fn log_returns_cases() {
        let e = std::f64::consts::E;
        let x = FunctionalTimeSeries::from_rows(&[vec![1.0, e, e * e], vec![2.0, 2.0, 2.0]]).unwrap();
        let r = log_returns(&x).unwrap();
        assert_eq!(r.n_points(), 2);
        assert_eq!(r.len(), 2);
        assert!((r.row(0)[0] - 1.0).abs() < 1e-15 && (r.row(0)[1] - 1.0).abs() < 1e-15);
        assert_eq!(r.row(1), &[0.0, 0.0]);

        let bad = FunctionalTimeSeries::from_rows(&[vec![1.0, 2.0, 3.0], vec![1.0, 0.0, 3.0]]).unwrap();
        assert!(matches!(
            log_returns(&bad),
            Err(Error::InvalidEntry { row: 1, col: 1, .. })
        ));
    }

    #[test]
    fn improvement_rate_cases() {
        let x = FunctionalTimeSeries::from_rows(&[vec![3.0, 1.0], vec![1.0, 1.0]]).unwrap();
        let m = improvement_rates(&x).unwrap();
        assert_eq!(m.len(), 1);
        assert_eq!(m.row(0), &[1.0, 0.0]);
        let single = FunctionalTimeSeries::from_rows(&[vec![1.0, 1.0]]).unwrap();
        assert!(improvement_rates(&single).is_err());
        let zero = FunctionalTimeSeries::from_rows(&[vec![1.0, 1.0], vec![0.0, 1.0]]).unwrap();
        assert!(improvement_rates(&zero).is_err());
    }

    fn series_strategy() -> impl Strategy<Value = FunctionalTimeSeries> {
        (1usize..12, 2usize..6).prop_flat_map(|(t, p)| {
            prop::collection::vec(-10.0f64..10.0, t * p)
                .prop_map(move |v| FunctionalTimeSeries::new(v, Grid::uniform(p).unwrap()).unwrap())
        })
    }

    proptest! {
        #[test]
        fn quantiles_are_monotone_in_level(x in series_strategy(), a in 0.01f64..0.99, b in 0.01f64..0.99) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let ql = empirical_quantile_curve(&x, lo).unwrap();
            let qh = empirical_quantile_curve(&x, hi).unwrap();
            prop_assert!(ql.values.iter().zip(&qh.values).all(|(l, h)| l <= h));
        }

        #[test]
        fn at_least_tau_of_each_column_is_below(x in series_strategy(), tau in 0.01f64..0.99) {
            let q = empirical_quantile_curve(&x, tau).unwrap();
            for j in 0..x.n_points() {
                let below = x.column(j).iter().filter(|&&v| v <= q.values[j]).count();
                prop_assert!(below as f64 / x.len() as f64 >= tau);
            }
        }

        #[test]
        fn transforms_are_scale_invariant(
            rows in prop::collection::vec(prop::collection::vec(0.1f64..10.0, 4), 2..8),
            k in 0.1f64..50.0,
        ) {
            let x = FunctionalTimeSeries::from_rows(&rows).unwrap();
            let xs = x.scaled(k).unwrap();
            let (a, b) = (log_returns(&x).unwrap(), log_returns(&xs).unwrap());
            prop_assert!(a.values().iter().zip(b.values()).all(|(u, v)| (u - v).abs() < 1e-9));
            let (a, b) = (improvement_rates(&x).unwrap(), improvement_rates(&xs).unwrap());
            prop_assert!(a.values().iter().zip(b.values()).all(|(u, v)| (u - v).abs() < 1e-12));
            prop_assert!(a.values().iter().all(|v| v.abs() < 2.0));
        }
    }
}
