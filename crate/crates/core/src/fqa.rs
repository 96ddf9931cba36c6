//! Functional quantile autocorrelation (FQA) and the FQA dissimilarity.
//!
//! For a series `X_1..X_T`, a quantile level `tau` and a threshold `beta`, the
//! indicator at time `i` is 1 when the fraction of grid points at which `X_i`
//! lies at or below the pointwise `tau`-quantile curve is at most `beta`. The
//! FQA at lag `l` correlates the `(tau, beta)` indicator at time `i` with the
//! `(tau2, beta2)` indicator at time `i + l`:
//!
//! ```text
//! gamma = P_joint - P_1 * P_2
//! rho   = gamma / sqrt(P_1 (1 - P_1) P_2 (1 - P_2))
//! ```
//!
//! where the marginals average over all `T` curves and the joint probability
//! averages over the `T - l` lagged pairs.
//!
//! Feature vectors list the coordinates lag-major, then `tau`, `tau2`, `beta`,
//! `beta2`. In reduced mode `beta = tau` and `beta2 = tau2`, so only the lag
//! and level pair vary.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fts::{below_fraction, empirical_quantile_curve, FunctionalTimeSeries};

pub const DEFAULT_LEVELS: [f64; 3] = [0.1, 0.5, 0.9];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Thresholds {
    /// Each threshold is tied to its quantile level.
    Reduced,
    Explicit(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FqaParams {
    pub lags: Vec<usize>,
    pub levels: Vec<f64>,
    pub thresholds: Thresholds,
}

impl Default for FqaParams {
    fn default() -> Self {
        Self {
            lags: vec![1],
            levels: DEFAULT_LEVELS.to_vec(),
            thresholds: Thresholds::Reduced,
        }
    }
}

/// One coordinate of the FQA feature vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureKey {
    pub lag: usize,
    pub tau: f64,
    pub tau2: f64,
    pub beta: f64,
    pub beta2: f64,
}

impl FqaParams {
    pub fn reduced(lags: Vec<usize>, levels: Vec<f64>) -> Result<Self> {
        let p = Self {
            lags,
            levels,
            thresholds: Thresholds::Reduced,
        };
        p.check()?;
        Ok(p)
    }

    pub fn general(lags: Vec<usize>, levels: Vec<f64>, thresholds: Vec<f64>) -> Result<Self> {
        let p = Self {
            lags,
            levels,
            thresholds: Thresholds::Explicit(thresholds),
        };
        p.check()?;
        Ok(p)
    }

    /// Checks the parameter sets independently of any series.
    pub fn check(&self) -> Result<()> {
        check_lags(&self.lags)?;
        if self.levels.is_empty() {
            return Err(Error::domain("at least one quantile level is required"));
        }
        if self.levels.iter().any(|&t| !(t > 0.0 && t < 1.0)) {
            return Err(Error::domain("quantile levels must lie in (0,1)"));
        }
        if self.levels.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::domain("quantile levels must be distinct and sorted"));
        }
        if let Thresholds::Explicit(b) = &self.thresholds {
            if b.is_empty() {
                return Err(Error::domain("at least one threshold is required"));
            }
            if b.iter().any(|&t| !(0.0..=1.0).contains(&t)) {
                return Err(Error::domain("thresholds must lie in [0,1]"));
            }
            if b.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(Error::domain("thresholds must be distinct and sorted"));
            }
        }
        Ok(())
    }

    /// Checks the parameters against a series of length `len`.
    pub fn check_for_len(&self, len: usize) -> Result<()> {
        self.check()?;
        let max_lag = *self.lags.iter().max().expect("checked nonempty");
        if max_lag + 2 > len {
            return Err(Error::domain(format!(
                "lag {max_lag} needs a series of length at least {}, got {len}",
                max_lag + 2
            )));
        }
        Ok(())
    }

    fn n_thresholds(&self) -> usize {
        match &self.thresholds {
            Thresholds::Reduced => 1,
            Thresholds::Explicit(b) => b.len(),
        }
    }

    /// Number of FQA coordinates: `L P^2` (reduced) or `L P^2 B^2`.
    pub fn n_features(&self) -> usize {
        let b = self.n_thresholds();
        self.lags.len() * self.levels.len().pow(2) * b * b
    }

    /// Multiplier making squared Euclidean distance between scaled feature
    /// vectors equal to the FQA dissimilarity.
    pub fn scale(&self) -> f64 {
        1.0 / (4.0 * self.n_features() as f64).sqrt()
    }

    /// Coordinate order of the feature vector.
    pub fn order(&self) -> Vec<FeatureKey> {
        let mut keys = Vec::with_capacity(self.n_features());
        for &lag in &self.lags {
            for &tau in &self.levels {
                for &tau2 in &self.levels {
                    match &self.thresholds {
                        Thresholds::Reduced => keys.push(FeatureKey {
                            lag,
                            tau,
                            tau2,
                            beta: tau,
                            beta2: tau2,
                        }),
                        Thresholds::Explicit(b) => {
                            for &beta in b {
                                for &beta2 in b {
                                    keys.push(FeatureKey {
                                        lag,
                                        tau,
                                        tau2,
                                        beta,
                                        beta2,
                                    });
                                }
                            }
                        }
                    }
                }
            }
        }
        keys
    }
}

pub(crate) fn check_lags(lags: &[usize]) -> Result<()> {
    if lags.is_empty() {
        return Err(Error::domain("at least one lag is required"));
    }
    if lags.contains(&0) {
        return Err(Error::domain("lags must be positive"));
    }
    let mut sorted = lags.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != lags.len() {
        return Err(Error::domain("lags must be distinct"));
    }
    Ok(())
}

fn check_level(tau: f64) -> Result<()> {
    if tau > 0.0 && tau < 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("quantile level must lie in (0,1), got {tau}")))
    }
}

fn check_threshold(beta: f64) -> Result<()> {
    if (0.0..=1.0).contains(&beta) {
        Ok(())
    } else {
        Err(Error::domain(format!("threshold must lie in [0,1], got {beta}")))
    }
}

/// Per-curve fraction of grid points at or below the level's quantile curve.
fn below_fractions(x: &FunctionalTimeSeries, tau: f64) -> Result<Vec<f64>> {
    let q = empirical_quantile_curve(x, tau)?;
    x.rows().map(|row| below_fraction(row, &q)).collect()
}

fn threshold_indicators(fractions: &[f64], beta: f64) -> Vec<bool> {
    fractions.iter().map(|&f| f <= beta).collect()
}

/// Binary indicators `#A_tau^i / p <= beta`, one per curve.
pub fn indicator_series(x: &FunctionalTimeSeries, tau: f64, beta: f64) -> Result<Vec<bool>> {
    check_level(tau)?;
    check_threshold(beta)?;
    Ok(threshold_indicators(&below_fractions(x, tau)?, beta))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaggedCovariance {
    pub gamma: f64,
    pub p1: f64,
    pub p2: f64,
}

impl LaggedCovariance {
    fn correlation(&self, key: FeatureKey) -> Result<f64> {
        let degenerate = |p: f64| p == 0.0 || p == 1.0;
        if degenerate(self.p1) || degenerate(self.p2) {
            return Err(Error::DegenerateMarginal {
                tau: key.tau,
                tau2: key.tau2,
                lag: key.lag,
                beta: key.beta,
                beta2: key.beta2,
                p1: self.p1,
                p2: self.p2,
            });
        }
        let denom = (self.p1 * (1.0 - self.p1) * self.p2 * (1.0 - self.p2)).sqrt();
        Ok(self.gamma / denom)
    }
}

fn mean_of(ind: &[bool]) -> f64 {
    ind.iter().filter(|&&b| b).count() as f64 / ind.len() as f64
}

fn lagged_covariance(first: &[bool], second: &[bool], lag: usize) -> LaggedCovariance {
    let t = first.len();
    let pairs = t - lag;
    let joint = (0..pairs).filter(|&i| first[i] && second[i + lag]).count() as f64 / pairs as f64;
    let p1 = mean_of(first);
    let p2 = mean_of(second);
    LaggedCovariance {
        gamma: joint - p1 * p2,
        p1,
        p2,
    }
}

fn check_lag(lag: usize, len: usize) -> Result<()> {
    if lag == 0 || lag + 2 > len {
        return Err(Error::domain(format!(
            "lag {lag} out of range for a series of length {len} (need 1 <= lag <= T-2)"
        )));
    }
    Ok(())
}

fn covariance_parts(
    x: &FunctionalTimeSeries,
    tau: f64,
    tau2: f64,
    lag: usize,
    beta: f64,
    beta2: f64,
) -> Result<LaggedCovariance> {
    check_lag(lag, x.len())?;
    let first = indicator_series(x, tau, beta)?;
    let second = indicator_series(x, tau2, beta2)?;
    Ok(lagged_covariance(&first, &second, lag))
}

/// Functional quantile autocovariance estimate.
pub fn fqa_autocovariance(
    x: &FunctionalTimeSeries,
    tau: f64,
    tau2: f64,
    lag: usize,
    beta: f64,
    beta2: f64,
) -> Result<f64> {
    Ok(covariance_parts(x, tau, tau2, lag, beta, beta2)?.gamma)
}

/// Functional quantile autocorrelation estimate, in `[-1, 1]`.
pub fn fqa_autocorrelation(
    x: &FunctionalTimeSeries,
    tau: f64,
    tau2: f64,
    lag: usize,
    beta: f64,
    beta2: f64,
) -> Result<f64> {
    covariance_parts(x, tau, tau2, lag, beta, beta2)?.correlation(FeatureKey {
        lag,
        tau,
        tau2,
        beta,
        beta2,
    })
}

/// How degenerate marginals are treated during feature extraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DegeneratePolicy {
    #[default]
    Error,
    /// Replace the coordinate by 0 and log a warning.
    Zero,
}

/// Unscaled FQA estimates in [`FqaParams::order`]. Quantile curves and
/// indicators are computed once per level and threshold.
pub fn raw_features(x: &FunctionalTimeSeries, params: &FqaParams) -> Result<Vec<f64>> {
    raw_features_with(x, params, DegeneratePolicy::Error).map(|(v, _)| v)
}

/// Like [`raw_features`]; also returns the indices of zeroed coordinates
/// under [`DegeneratePolicy::Zero`].
pub fn raw_features_with(
    x: &FunctionalTimeSeries,
    params: &FqaParams,
    policy: DegeneratePolicy,
) -> Result<(Vec<f64>, Vec<usize>)> {
    params.check_for_len(x.len())?;
    let fractions: Vec<Vec<f64>> = params
        .levels
        .iter()
        .map(|&tau| below_fractions(x, tau))
        .collect::<Result<_>>()?;
    let level_index = |tau: f64| params.levels.iter().position(|&l| l == tau).expect("known level");

    let mut cache: Vec<((usize, u64), Vec<bool>)> = Vec::new();
    let mut indicators = |level: usize, beta: f64| -> Vec<bool> {
        let key = (level, beta.to_bits());
        if let Some((_, v)) = cache.iter().find(|(k, _)| *k == key) {
            return v.clone();
        }
        let v = threshold_indicators(&fractions[level], beta);
        cache.push((key, v.clone()));
        v
    };

    let mut values = Vec::with_capacity(params.n_features());
    let mut zeroed = Vec::new();
    for (k, key) in params.order().into_iter().enumerate() {
        let first = indicators(level_index(key.tau), key.beta);
        let second = indicators(level_index(key.tau2), key.beta2);
        match lagged_covariance(&first, &second, key.lag).correlation(key) {
            Ok(rho) => values.push(rho),
            Err(e) if policy == DegeneratePolicy::Zero => {
                log::warn!("{e}; coordinate {k} set to 0");
                zeroed.push(k);
                values.push(0.0);
            }
            Err(e) => return Err(e),
        }
    }
    Ok((values, zeroed))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FqaFeatureVector {
    pub params: FqaParams,
    pub order: Vec<FeatureKey>,
    pub values: Vec<f64>,
}

/// Scaled FQA features; `||v(X) - v(Y)||^2 = d_fqa(X, Y)`.
pub fn feature_vector(x: &FunctionalTimeSeries, params: &FqaParams) -> Result<FqaFeatureVector> {
    let scale = params.scale();
    let values = raw_features(x, params)?.into_iter().map(|r| r * scale).collect();
    Ok(FqaFeatureVector {
        params: params.clone(),
        order: params.order(),
        values,
    })
}

/// `1/(4 L P^2 B^2) * sum (rho1 - rho2)^2` over two lists of raw estimates.
pub fn fqa_distance_from_raw(raw1: &[f64], raw2: &[f64]) -> f64 {
    let sum: f64 = raw1.iter().zip(raw2).map(|(a, b)| (a - b) * (a - b)).sum();
    sum / (4.0 * raw1.len() as f64)
}

/// The FQA dissimilarity between two series (lengths may differ).
pub fn d_fqa(x1: &FunctionalTimeSeries, x2: &FunctionalTimeSeries, params: &FqaParams) -> Result<f64> {
    let r1 = raw_features(x1, params).map_err(|e| e.in_series(0))?;
    let r2 = raw_features(x2, params).map_err(|e| e.in_series(1))?;
    Ok(fqa_distance_from_raw(&r1, &r2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fts::Grid;
    use crate::rng::stream;
    use proptest::prelude::*;
    use rand_distr::{Distribution, StandardNormal};

    /// Rows whose below-median fractions alternate 0.5 / 1.0 (p = 4).
    fn alternating() -> FunctionalTimeSeries {
        FunctionalTimeSeries::from_rows(&[
            vec![0.0, 1.0, 1.0, 1.0],
            vec![0.0, 0.0, 0.0, 1.0],
            vec![0.0, 1.0, 1.0, 1.0],
            vec![0.0, 0.0, 0.0, 1.0],
        ])
        .unwrap()
    }

    fn noise(t: usize, p: usize, seed: u64) -> FunctionalTimeSeries {
        let mut rng = stream(seed, 0);
        let v = (0..t * p).map(|_| StandardNormal.sample(&mut rng)).collect();
        FunctionalTimeSeries::new(v, Grid::uniform(p).unwrap()).unwrap()
    }

    #[test]
    fn indicator_construction() {
        // median curve is (0,0,0,1): rows 0,2 are below on half the grid, rows 1,3 on all of it
        let x = alternating();
        assert_eq!(
            indicator_series(&x, 0.5, 0.5).unwrap(),
            vec![true, false, true, false]
        );
        assert!(indicator_series(&x, 0.5, 1.0).unwrap().iter().all(|&b| b));
        assert!(indicator_series(&x, 0.5, 0.0).unwrap().iter().all(|&b| !b));
    }

    #[test]
    fn alternating_pattern_is_perfectly_anticorrelated() {
        let x = alternating();
        assert_eq!(fqa_autocovariance(&x, 0.5, 0.5, 1, 0.5, 0.5).unwrap(), -0.25);
        assert_eq!(fqa_autocorrelation(&x, 0.5, 0.5, 1, 0.5, 0.5).unwrap(), -1.0);
        assert_eq!(fqa_autocovariance(&x, 0.5, 0.5, 1, 1.0, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn degenerate_marginal_is_an_error() {
        let err = fqa_autocorrelation(&alternating(), 0.5, 0.5, 1, 1.0, 0.5).unwrap_err();
        match err {
            Error::DegenerateMarginal { tau, beta, lag, .. } => {
                assert_eq!((tau, beta, lag), (0.5, 1.0, 1));
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn lag_range() {
        let x = alternating();
        assert!(fqa_autocovariance(&x, 0.5, 0.5, 0, 0.5, 0.5).is_err());
        assert!(fqa_autocovariance(&x, 0.5, 0.5, 3, 0.5, 0.5).is_err());
        assert!(fqa_autocovariance(&x, 0.5, 0.5, 2, 0.5, 0.5).is_ok());
    }

    #[test]
    fn correlation_is_covariance_over_marginal_spread() {
        let x = noise(300, 10, 11);
        for (tau, tau2) in [(0.1, 0.5), (0.5, 0.9), (0.9, 0.9)] {
            let gamma = fqa_autocovariance(&x, tau, tau2, 1, tau, tau2).unwrap();
            let rho = fqa_autocorrelation(&x, tau, tau2, 1, tau, tau2).unwrap();
            let p1 = mean_of(&indicator_series(&x, tau, tau).unwrap());
            let p2 = mean_of(&indicator_series(&x, tau2, tau2).unwrap());
            let expected = gamma / (p1 * (1.0 - p1) * p2 * (1.0 - p2)).sqrt();
            assert!((rho - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn iid_autocovariance_is_small() {
        let hits = (0..100)
            .filter(|&s| fqa_autocovariance(&noise(2000, 8, s), 0.5, 0.5, 1, 0.5, 0.5).unwrap().abs() < 0.05)
            .count();
        assert!(hits >= 99, "{hits}/100");
    }

    #[test]
    fn feature_lengths() {
        let x = noise(50, 6, 3);
        let reduced = FqaParams::reduced(vec![1], vec![0.1, 0.5, 0.9]).unwrap();
        assert_eq!(feature_vector(&x, &reduced).unwrap().values.len(), 9);
        let general = FqaParams::general(vec![1, 2], vec![0.1, 0.5, 0.9], vec![0.3, 0.7]).unwrap();
        assert_eq!(general.n_features(), 72);
        assert_eq!(general.order().len(), 72);
        assert_eq!(general.scale(), 1.0 / (4.0f64 * 72.0).sqrt());
    }

    #[test]
    fn params_validation() {
        assert!(FqaParams::reduced(vec![], vec![0.5]).is_err());
        assert!(FqaParams::reduced(vec![1, 1], vec![0.5]).is_err());
        assert!(FqaParams::reduced(vec![0], vec![0.5]).is_err());
        assert!(FqaParams::reduced(vec![1], vec![0.9, 0.1]).is_err());
        assert!(FqaParams::reduced(vec![1], vec![1.0]).is_err());
        assert!(FqaParams::general(vec![1], vec![0.5], vec![1.5]).is_err());
        let p = FqaParams::default();
        assert!(p.check_for_len(3).is_ok());
        assert!(p.check_for_len(2).is_err());
    }

    #[test]
    fn degenerate_policy_zero_marks_coordinates() {
        let x = alternating();
        let params = FqaParams::general(vec![1], vec![0.5], vec![0.5, 1.0]).unwrap();
        assert!(raw_features(&x, &params).is_err());
        let (v, zeroed) = raw_features_with(&x, &params, DegeneratePolicy::Zero).unwrap();
        assert_eq!(v, vec![-1.0, 0.0, 0.0, 0.0]);
        assert_eq!(zeroed, vec![1, 2, 3]);
    }

    #[test]
    fn params_serialize() {
        let json = serde_json::to_string(&FqaParams::default()).unwrap();
        assert_eq!(json, r#"{"lags":[1],"levels":[0.1,0.5,0.9],"thresholds":"reduced"}"#);
        let g: FqaParams =
            serde_json::from_str(r#"{"lags":[1],"levels":[0.5],"thresholds":{"explicit":[0.2]}}"#).unwrap();
        assert_eq!(g.thresholds, Thresholds::Explicit(vec![0.2]));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn features_bounded_and_consistent_with_distance(s1 in 0u64..1000, s2 in 1000u64..2000, general in any::<bool>()) {
            let x = noise(60, 7, s1);
            let y = noise(45, 7, s2);
            let params = if general {
                FqaParams::general(vec![1, 2], vec![0.3, 0.5, 0.7], vec![0.4, 0.6]).unwrap()
            } else {
                FqaParams::reduced(vec![1, 2], vec![0.3, 0.5, 0.7]).unwrap()
            };
            let (rx, ry) = match (raw_features(&x, &params), raw_features(&y, &params)) {
                (Ok(a), Ok(b)) => (a, b),
                _ => return Ok(()),
            };
            prop_assert!(rx.iter().chain(&ry).all(|r| (-1.0..=1.0).contains(r)));
            let vx = feature_vector(&x, &params).unwrap().values;
            let vy = feature_vector(&y, &params).unwrap().values;
            let sq: f64 = vx.iter().zip(&vy).map(|(a, b)| (a - b) * (a - b)).sum();
            let d = d_fqa(&x, &y, &params).unwrap();
            prop_assert!((sq - d).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&d));
            prop_assert_eq!(d, d_fqa(&y, &x, &params).unwrap());
            prop_assert_eq!(d_fqa(&x, &x, &params).unwrap(), 0.0);
        }
    }
}
