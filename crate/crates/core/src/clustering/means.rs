use rand::Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;

use super::{best_start, memberships_into, objective, FuzzyPartition, Prototypes, SolverConfig};
use crate::error::{Error, Result};
use crate::rng::stream;

struct Run {
    u: Vec<Vec<f64>>,
    centroids: Vec<Vec<f64>>,
    iterations: usize,
    converged: bool,
    trace: Vec<f64>,
}

pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Membership-weighted sums `sum_i u_ic^m x_i` and masses `sum_i u_ic^m`.
fn weighted_sums(x: &[Vec<f64>], u: &[Vec<f64>], m: f64) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    if x.len() != u.len() {
        return Err(Error::Dimension {
            expected: x.len(),
            got: u.len(),
        });
    }
    let k = x.first().map_or(0, Vec::len);
    let c_count = u.first().map_or(0, Vec::len);
    let mut sums = vec![vec![0.0; k]; c_count];
    let mut mass = vec![0.0; c_count];
    for (xi, ui) in x.iter().zip(u) {
        for (c, &uic) in ui.iter().enumerate() {
            let w = uic.powf(m);
            mass[c] += w;
            sums[c].iter_mut().zip(xi).for_each(|(o, v)| *o += w * v);
        }
    }
    Ok((sums, mass))
}

/// `v_c = sum_i u_ic^m x_i / sum_i u_ic^m`
pub fn centroids_from_memberships(x: &[Vec<f64>], u: &[Vec<f64>], m: f64) -> Result<Vec<Vec<f64>>> {
    let (mut out, mass) = weighted_sums(x, u, m)?;
    for (c, (centroid, &total)) in out.iter_mut().zip(&mass).enumerate() {
        if total <= 0.0 {
            return Err(Error::DegenerateCluster(c));
        }
        centroid.iter_mut().for_each(|v| *v /= total);
    }
    Ok(out)
}

/// As [`centroids_from_memberships`], except that a cluster left with zero
/// membership mass keeps its previous centroid.
fn centroid_step(x: &[Vec<f64>], u: &[Vec<f64>], m: f64, prev: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    if prev.is_empty() {
        return centroids_from_memberships(x, u, m);
    }
    let (mut out, mass) = weighted_sums(x, u, m)?;
    for (c, centroid) in out.iter_mut().enumerate() {
        if mass[c] > 0.0 {
            centroid.iter_mut().for_each(|v| *v /= mass[c]);
        } else {
            log::debug!("cluster {c} lost all membership; keeping its centroid");
            centroid.clone_from(&prev[c]);
        }
    }
    Ok(out)
}

fn dirichlet_rows<R: Rng + ?Sized>(n: usize, c: usize, rng: &mut R) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| {
            let g: Vec<f64> = (0..c).map(|_| Exp1.sample(rng)).collect();
            let s: f64 = g.iter().sum();
            g.into_iter().map(|v: f64| v / s).collect()
        })
        .collect()
}

fn run_from(x: &[Vec<f64>], cfg: &SolverConfig, mut u: Vec<Vec<f64>>) -> Result<Run> {
    let mut trace = Vec::new();
    let mut centroids = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let mut dist = vec![0.0; cfg.c];
    let mut next = vec![vec![0.0; cfg.c]; x.len()];
    while iterations < cfg.max_iter {
        centroids = centroid_step(x, &u, cfg.m, &centroids)?;
        let mut delta: f64 = 0.0;
        for (i, xi) in x.iter().enumerate() {
            for (dc, v) in dist.iter_mut().zip(&centroids) {
                *dc = sq_dist(xi, v);
            }
            memberships_into(&dist, cfg.m, &mut next[i]);
            for (a, b) in next[i].iter().zip(&u[i]) {
                delta = delta.max((a - b).abs());
            }
        }
        std::mem::swap(&mut u, &mut next);
        iterations += 1;
        trace.push(objective(&u, cfg.m, |i, c| sq_dist(&x[i], &centroids[c])));
        if delta < cfg.tol {
            converged = true;
            break;
        }
    }
    Ok(Run {
        u,
        centroids,
        iterations,
        converged,
        trace,
    })
}

fn check_features(x: &[Vec<f64>], cfg: &SolverConfig) -> Result<()> {
    cfg.check(x.len())?;
    let k = x[0].len();
    if k == 0 {
        return Err(Error::domain("empty feature vectors"));
    }
    if let Some(bad) = x.iter().find(|v| v.len() != k) {
        return Err(Error::Dimension {
            expected: k,
            got: bad.len(),
        });
    }
    Ok(())
}

fn finish(cfg: &SolverConfig, run: Run, start_objectives: Vec<f64>) -> FuzzyPartition {
    if !run.converged {
        log::warn!("C-means stopped at max_iter = {} without convergence", cfg.max_iter);
    }
    FuzzyPartition {
        c: cfg.c,
        m: cfg.m,
        memberships: run.u,
        prototypes: Prototypes::Centroids(run.centroids),
        objective: *run.trace.last().expect("at least one iteration"),
        iterations: run.iterations,
        converged: run.converged,
        start_objectives,
        objective_trace: run.trace,
    }
}

/// Fuzzy C-means on feature vectors. Start `s` draws the rows of `U` from a
/// flat Dirichlet using stream `(seed, s)`; iteration stops once
/// `max |U - U_old| < tol`.
pub fn fuzzy_c_means(x: &[Vec<f64>], cfg: &SolverConfig) -> Result<FuzzyPartition> {
    check_features(x, cfg)?;
    let runs: Vec<(f64, Run)> = (0..cfg.n_starts)
        .into_par_iter()
        .map(|s| {
            let u0 = dirichlet_rows(x.len(), cfg.c, &mut stream(cfg.seed, s as u64));
            let run = run_from(x, cfg, u0)?;
            Ok((*run.trace.last().expect("at least one iteration"), run))
        })
        .collect::<Result<_>>()?;
    let (_, objectives, run) = best_start(runs);
    Ok(finish(cfg, run, objectives))
}

/// Single C-means run from a given membership matrix.
pub fn fuzzy_c_means_from(x: &[Vec<f64>], cfg: &SolverConfig, u0: Vec<Vec<f64>>) -> Result<FuzzyPartition> {
    check_features(x, cfg)?;
    if u0.len() != x.len() || u0.iter().any(|r| r.len() != cfg.c) {
        return Err(Error::domain("initial membership matrix must be n x C"));
    }
    let run = run_from(x, cfg, u0)?;
    Ok(finish(cfg, run, Vec::new()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::{prop_assert, proptest, ProptestConfig};

    fn random_points(n: usize, k: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = stream(seed, 0);
        (0..n).map(|_| (0..k).map(|_| rng.random::<f64>()).collect()).collect()
    }

    #[test]
    fn centroid_formula() {
        let x = vec![vec![0.0, 0.0], vec![2.0, 4.0]];
        let u = vec![vec![1.0, 0.5], vec![0.0, 0.5]];
        let v = centroids_from_memberships(&x, &u, 2.0).unwrap();
        assert_eq!(v, vec![vec![0.0, 0.0], vec![1.0, 2.0]]);
        assert!(matches!(
            centroids_from_memberships(&x, &[vec![1.0, 0.0], vec![1.0, 0.0]], 2.0),
            Err(Error::DegenerateCluster(1))
        ));
    }

    #[test]
    fn own_cluster_per_vector() {
        let x = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]];
        let p = fuzzy_c_means(&x, &SolverConfig::new(3, 1.5).with_starts(20)).unwrap();
        assert!(p.converged);
        let labels = p.hard_labels();
        let mut sorted = labels.clone();
        sorted.sort();
        assert_eq!(sorted, vec![0, 1, 2]);
        for (row, &c) in p.memberships.iter().zip(&labels) {
            assert!(row[c] >= 0.99, "{row:?}");
        }
    }

    #[test]
    fn identical_vectors() {
        let x = vec![vec![0.3, -0.2]; 4];
        let p = fuzzy_c_means(&x, &SolverConfig::new(2, 2.0).with_starts(3)).unwrap();
        assert!(p.objective < 1e-25);
        match &p.prototypes {
            Prototypes::Centroids(v) => {
                for c in v {
                    assert!(sq_dist(c, &x[0]) < 1e-30);
                }
            }
            _ => panic!("expected centroids"),
        }
    }

    #[test]
    fn mismatched_lengths() {
        let x = vec![vec![0.0, 1.0], vec![1.0]];
        assert!(matches!(fuzzy_c_means(&x, &SolverConfig::new(2, 2.0)), Err(Error::Dimension { .. })));
    }

    #[test]
    fn deterministic() {
        let x = random_points(15, 4, 2);
        let cfg = SolverConfig::new(3, 2.0).with_starts(12).with_seed(5);
        assert_eq!(fuzzy_c_means(&x, &cfg).unwrap(), fuzzy_c_means(&x, &cfg).unwrap());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn means_invariants(seed in 0u64..1000, c in 2usize..5, m in 1.2f64..3.0) {
            let x = random_points(14, 3, seed);
            let cfg = SolverConfig::new(c, m).with_starts(6).with_seed(seed);
            let p = fuzzy_c_means(&x, &cfg).unwrap();
            for row in &p.memberships {
                prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
                prop_assert!(row.iter().all(|u| (0.0..=1.0).contains(u)));
            }
            for w in p.objective_trace.windows(2) {
                prop_assert!(w[1] <= w[0] * (1.0 + 1e-12) + 1e-15, "{} > {}", w[1], w[0]);
            }
            prop_assert!(p.start_objectives.iter().all(|&o| p.objective <= o));
        }
    }
}
