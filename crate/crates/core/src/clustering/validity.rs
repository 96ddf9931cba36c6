use serde::{Deserialize, Serialize};

use super::means::{centroids_from_memberships, sq_dist};
use super::{fuzzy_c_means, fuzzy_c_medoids, Algorithm, FuzzyPartition, Prototypes, SolverConfig};
use crate::dissimilarity::{DissimilarityMatrix, Metric};
use crate::error::{Error, Result};

/// Matrix of squared Euclidean distances between feature vectors.
pub fn squared_euclidean_matrix(x: &[Vec<f64>], metric: Option<Metric>) -> DissimilarityMatrix {
    DissimilarityMatrix::from_fn(x.len(), metric, |i, j| sq_dist(&x[i], &x[j]))
}

/// Xie-Beni index
/// `sum_i sum_c u_ic^2 |x_i - v_c|^2 / (n min_{c != c'} |v_c - v_c'|^2)`.
pub fn xie_beni(x: &[Vec<f64>], u: &[Vec<f64>], centroids: &[Vec<f64>]) -> Result<f64> {
    if x.len() != u.len() {
        return Err(Error::Dimension {
            expected: x.len(),
            got: u.len(),
        });
    }
    if centroids.len() < 2 {
        return Err(Error::domain("Xie-Beni needs at least 2 centroids"));
    }
    let mut sep = f64::INFINITY;
    for a in 0..centroids.len() {
        for b in a + 1..centroids.len() {
            sep = sep.min(sq_dist(&centroids[a], &centroids[b]));
        }
    }
    if sep <= 0.0 {
        return Err(Error::DegenerateSeparation(sep));
    }
    let mut num = 0.0;
    for (xi, ui) in x.iter().zip(u) {
        if ui.len() != centroids.len() {
            return Err(Error::Dimension {
                expected: centroids.len(),
                got: ui.len(),
            });
        }
        for (uic, v) in ui.iter().zip(centroids) {
            num += uic * uic * sq_dist(xi, v);
        }
    }
    Ok(num / (x.len() as f64 * sep))
}

/// Xie-Beni index of a fitted partition. Medoid partitions are scored
/// against the centroids implied by their memberships.
pub fn xie_beni_partition(x: &[Vec<f64>], p: &FuzzyPartition) -> Result<f64> {
    match &p.prototypes {
        Prototypes::Centroids(v) => xie_beni(x, &p.memberships, v),
        Prototypes::Medoids(_) => {
            let v = centroids_from_memberships(x, &p.memberships, p.m)?;
            xie_beni(x, &p.memberships, &v)
        }
    }
}

/// Runs either solver on scaled feature vectors.
pub fn fit(x: &[Vec<f64>], algorithm: Algorithm, cfg: &SolverConfig) -> Result<FuzzyPartition> {
    match algorithm {
        Algorithm::Medoids => fuzzy_c_medoids(&squared_euclidean_matrix(x, None), cfg),
        Algorithm::Means => fuzzy_c_means(x, cfg),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionEntry {
    #[serde(rename = "C")]
    pub c: usize,
    pub m: f64,
    pub xbi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    #[serde(rename = "C")]
    pub c: usize,
    pub m: f64,
    pub xbi: f64,
    pub table: Vec<SelectionEntry>,
}

/// Grid search over `(C, m)` minimising the Xie-Beni index. Runs whose index
/// is undefined are kept in the table with their error. Ties go to the
/// smaller `C`, then the smaller `m`.
pub fn select_c_m(
    x: &[Vec<f64>],
    algorithm: Algorithm,
    c_grid: &[usize],
    m_grid: &[f64],
    base: &SolverConfig,
) -> Result<Selection> {
    if c_grid.is_empty() || m_grid.is_empty() {
        return Err(Error::domain("empty C or m grid"));
    }
    let n = x.len();
    if let Some(&c) = c_grid.iter().find(|&&c| c < 2 || c + 1 > n) {
        return Err(Error::domain(format!("C = {c} outside 2..={}", n.saturating_sub(1))));
    }
    let d = matches!(algorithm, Algorithm::Medoids).then(|| squared_euclidean_matrix(x, None));
    let mut table = Vec::with_capacity(c_grid.len() * m_grid.len());
    for &c in c_grid {
        for &m in m_grid {
            let cfg = SolverConfig { c, m, ..*base };
            let part = match &d {
                Some(d) => fuzzy_c_medoids(d, &cfg),
                None => fuzzy_c_means(x, &cfg),
            };
            let xbi = part.and_then(|p| xie_beni_partition(x, &p));
            table.push(match xbi {
                Ok(v) => SelectionEntry {
                    c,
                    m,
                    xbi: Some(v),
                    error: None,
                },
                Err(e) => SelectionEntry {
                    c,
                    m,
                    xbi: None,
                    error: Some(e.to_string()),
                },
            });
        }
    }
    let best = table
        .iter()
        .filter_map(|e| e.xbi.map(|v| (v, e.c, e.m)))
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.total_cmp(&b.2)))
        .ok_or_else(|| Error::Selection("every (C, m) run was degenerate".into()))?;
    Ok(Selection {
        c: best.1,
        m: best.2,
        xbi: best.0,
        table,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn singleton_crisp_clusters() {
        let x = vec![vec![0.0, 0.0], vec![3.0, 4.0]];
        let u = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        assert_eq!(xie_beni(&x, &u, &x).unwrap(), 0.0);
    }

    #[test]
    fn coincident_centroids() {
        let x = vec![vec![0.0], vec![1.0]];
        let u = vec![vec![0.5, 0.5]; 2];
        assert!(matches!(
            xie_beni(&x, &u, &[vec![0.5], vec![0.5]]),
            Err(Error::DegenerateSeparation(_))
        ));
    }

    #[test]
    fn hand_summed() {
        let x = vec![vec![0.0], vec![1.0], vec![4.0]];
        let u = vec![vec![0.9, 0.1], vec![0.6, 0.4], vec![0.2, 0.8]];
        let v = vec![vec![0.5], vec![3.5]];
        // numerator terms u^2 (x - v)^2
        let num = 0.81 * 0.25 + 0.01 * 12.25 + 0.36 * 0.25 + 0.16 * 6.25 + 0.04 * 12.25 + 0.64 * 0.25;
        let expected = num / (3.0 * 9.0);
        assert!((xie_beni(&x, &u, &v).unwrap() - expected).abs() < 1e-15);
    }

    fn blobs(seed: u64) -> Vec<Vec<f64>> {
        let mut rng = stream(seed, 0);
        (0..20)
            .map(|i| {
                let centre = if i < 10 { 0.0 } else { 5.0 };
                (0..3)
                    .map(|_| {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        centre + 0.3 * z
                    })
                    .collect::<Vec<f64>>()
            })
            .collect()
    }

    #[test]
    fn blobs_select_two_clusters() {
        let mut hits = 0;
        for seed in 0..20 {
            let x = blobs(seed);
            let base = SolverConfig::new(2, 2.0).with_starts(10).with_seed(seed);
            let s = select_c_m(&x, Algorithm::Means, &[2, 3, 4, 5, 6], &[1.5, 2.0], &base).unwrap();
            assert_eq!(s.table.len(), 10);
            hits += usize::from(s.c == 2);
        }
        assert!(hits >= 18, "{hits}/20");
    }

    #[test]
    fn single_pair_grid() {
        let x = blobs(1);
        let base = SolverConfig::new(2, 2.0).with_starts(5);
        for alg in [Algorithm::Means, Algorithm::Medoids] {
            let s = select_c_m(&x, alg, &[3], &[1.7], &base).unwrap();
            assert_eq!((s.c, s.m), (3, 1.7));
            assert_eq!(s.table.len(), 1);
        }
        assert!(select_c_m(&x, Algorithm::Means, &[20], &[1.7], &base).is_err());
    }

    #[test]
    fn all_degenerate_is_selection_error() {
        let x = vec![vec![1.0, 1.0]; 5];
        let base = SolverConfig::new(2, 2.0).with_starts(2);
        assert!(matches!(
            select_c_m(&x, Algorithm::Medoids, &[2], &[2.0], &base),
            Err(Error::Selection(_))
        ));
    }

    #[test]
    fn medoid_partition_uses_membership_centroids() {
        let x = blobs(3);
        let p = fit(&x, Algorithm::Medoids, &SolverConfig::new(2, 2.0).with_starts(5)).unwrap();
        let v = centroids_from_memberships(&x, &p.memberships, 2.0).unwrap();
        assert_eq!(xie_beni_partition(&x, &p).unwrap(), xie_beni(&x, &p.memberships, &v).unwrap());
    }
}
