use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

/// Membership-weighted mean feature vector of each cluster:
/// `sum_i u_ic x_i / sum_i u_ic`.
pub fn cluster_summary(features: &[Vec<f64>], u: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    if features.len() != u.len() {
        return Err(Error::Dimension {
            expected: features.len(),
            got: u.len(),
        });
    }
    let k = features.first().map_or(0, Vec::len);
    let c_count = u.first().map_or(0, Vec::len);
    let mut out = vec![vec![0.0; k]; c_count];
    let mut mass = vec![0.0; c_count];
    for (x, row) in features.iter().zip(u) {
        if x.len() != k {
            return Err(Error::Dimension { expected: k, got: x.len() });
        }
        for (c, &w) in row.iter().enumerate() {
            mass[c] += w;
            out[c].iter_mut().zip(x).for_each(|(o, v)| *o += w * v);
        }
    }
    for (c, centre) in out.iter_mut().enumerate() {
        if mass[c] <= 0.0 {
            return Err(Error::DegenerateCluster(c));
        }
        centre.iter_mut().for_each(|v| *v /= mass[c]);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairedTTest {
    pub mean_difference: f64,
    pub statistic: f64,
    pub df: f64,
    /// One-sided p-value for `mean(a) > mean(b)`.
    pub p_greater: f64,
}

/// Paired t-test on replicate scores.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<PairedTTest> {
    if a.len() != b.len() {
        return Err(Error::Dimension {
            expected: a.len(),
            got: b.len(),
        });
    }
    if a.len() < 2 {
        return Err(Error::domain("paired t-test needs at least 2 pairs"));
    }
    let n = a.len() as f64;
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let mean = diffs.iter().sum::<f64>() / n;
    let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1.0);
    if var <= 0.0 {
        return Err(Error::DegenerateVariance("all paired differences are equal".into()));
    }
    let t = mean / (var / n).sqrt();
    let dist = StudentsT::new(0.0, 1.0, n - 1.0).map_err(|e| Error::domain(e.to_string()))?;
    Ok(PairedTTest {
        mean_difference: mean,
        statistic: t,
        df: n - 1.0,
        p_greater: dist.sf(t),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn singleton_and_uniform() {
        let x = vec![vec![0.1, -0.4], vec![0.3, 0.2], vec![0.5, 0.0]];
        let u = vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![0.0, 1.0]];
        assert_eq!(cluster_summary(&x, &u).unwrap()[0], x[0]);
        let flat = vec![vec![0.5, 0.5]; 3];
        let s = cluster_summary(&x, &flat).unwrap();
        for c in 0..2 {
            assert!((s[c][0] - 0.3).abs() < 1e-15 && (s[c][1] + 0.2 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn weighted_pair() {
        let x = vec![vec![0.4], vec![-0.8]];
        let u = vec![vec![0.75, 0.25], vec![0.25, 0.75]];
        let s = cluster_summary(&x, &u).unwrap();
        // (0.75 * 0.4 + 0.25 * -0.8) / 1.0
        assert!((s[0][0] - 0.1).abs() < 1e-15);
        assert!((s[1][0] + 0.5).abs() < 1e-15);
    }

    #[test]
    fn empty_cluster() {
        let x = vec![vec![0.4], vec![-0.8]];
        let u = vec![vec![1.0, 0.0], vec![1.0, 0.0]];
        assert!(matches!(cluster_summary(&x, &u), Err(Error::DegenerateCluster(1))));
    }

    #[test]
    fn paired_test_known_value() {
        // differences 1, 2, 3: mean 2, sd 1, t = 2 sqrt(3)
        let t = paired_t_test(&[2.0, 4.0, 6.0], &[1.0, 2.0, 3.0]).unwrap();
        assert!((t.statistic - 2.0 * 3f64.sqrt()).abs() < 1e-12);
        assert_eq!(t.df, 2.0);
        // t_2 survival at 2 sqrt(3): 0.5 (1 - t / sqrt(t^2 + 2))
        let expected = 0.5 * (1.0 - t.statistic / (t.statistic.powi(2) + 2.0).sqrt());
        assert!((t.p_greater - expected).abs() < 1e-10);
        assert!(paired_t_test(&[1.0, 2.0], &[0.0, 1.0]).is_err());
    }
}
