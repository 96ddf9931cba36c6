use rand::seq::index::sample;
use rayon::prelude::*;

use super::{best_start, memberships_into, objective, FuzzyPartition, Prototypes, SolverConfig};
use crate::dissimilarity::DissimilarityMatrix;
use crate::error::{Error, Result};
use crate::rng::stream;

struct Run {
    medoids: Vec<usize>,
    u: Vec<Vec<f64>>,
    iterations: usize,
    converged: bool,
}

fn memberships(d: &DissimilarityMatrix, medoids: &[usize], m: f64) -> Vec<Vec<f64>> {
    let mut dist = vec![0.0; medoids.len()];
    (0..d.n())
        .map(|i| {
            for (x, &j) in dist.iter_mut().zip(medoids) {
                *x = d.get(i, j);
            }
            let mut u = vec![0.0; medoids.len()];
            memberships_into(&dist, m, &mut u);
            u
        })
        .collect()
}

/// For each cluster in turn, the object minimising `sum_i u_ic^m D(i, j)`
/// among objects not already chosen by an earlier cluster. Ties take the
/// lowest index.
fn medoid_step(d: &DissimilarityMatrix, u: &[Vec<f64>], m: f64) -> Vec<usize> {
    let n = d.n();
    let c_count = u[0].len();
    let mut chosen: Vec<usize> = Vec::with_capacity(c_count);
    let mut w = vec![0.0; n];
    for c in 0..c_count {
        for (wi, row) in w.iter_mut().zip(u) {
            *wi = row[c].powf(m);
        }
        let mut best: Option<(usize, f64)> = None;
        for j in 0..n {
            if chosen.contains(&j) {
                continue;
            }
            let cost: f64 = w.iter().enumerate().map(|(i, wi)| wi * d.get(i, j)).sum();
            if best.is_none_or(|(_, b)| cost < b) {
                best = Some((j, cost));
            }
        }
        chosen.push(best.expect("C <= n leaves a candidate").0);
    }
    chosen
}

fn run_from(d: &DissimilarityMatrix, cfg: &SolverConfig, mut medoids: Vec<usize>) -> Run {
    let mut iterations = 0;
    let mut converged = false;
    while iterations < cfg.max_iter {
        let u = memberships(d, &medoids, cfg.m);
        let next = medoid_step(d, &u, cfg.m);
        iterations += 1;
        if next == medoids {
            converged = true;
            break;
        }
        medoids = next;
    }
    let u = memberships(d, &medoids, cfg.m);
    Run {
        medoids,
        u,
        iterations,
        converged,
    }
}

fn finish(d: &DissimilarityMatrix, cfg: &SolverConfig, run: Run, start_objectives: Vec<f64>) -> FuzzyPartition {
    let obj = objective(&run.u, cfg.m, |i, c| d.get(i, run.medoids[c]));
    if !run.converged {
        log::warn!("C-medoids stopped at max_iter = {} without convergence", cfg.max_iter);
    }
    FuzzyPartition {
        c: cfg.c,
        m: cfg.m,
        memberships: run.u,
        prototypes: Prototypes::Medoids(run.medoids),
        objective: obj,
        iterations: run.iterations,
        converged: run.converged,
        start_objectives,
        objective_trace: Vec::new(),
    }
}

/// Fuzzy C-medoids with `cfg.n_starts` random initial medoid sets; start `s`
/// draws `C` distinct indices from stream `(seed, s)`. Starts run in
/// parallel and the result equals sequential execution.
pub fn fuzzy_c_medoids(d: &DissimilarityMatrix, cfg: &SolverConfig) -> Result<FuzzyPartition> {
    cfg.check(d.n())?;
    let runs: Vec<(f64, Run)> = (0..cfg.n_starts)
        .into_par_iter()
        .map(|s| {
            let init = sample(&mut stream(cfg.seed, s as u64), d.n(), cfg.c).into_vec();
            let run = run_from(d, cfg, init);
            (objective(&run.u, cfg.m, |i, c| d.get(i, run.medoids[c])), run)
        })
        .collect();
    let (_, objectives, run) = best_start(runs);
    Ok(finish(d, cfg, run, objectives))
}

/// Single run from given initial medoids.
pub fn fuzzy_c_medoids_from(d: &DissimilarityMatrix, cfg: &SolverConfig, init: &[usize]) -> Result<FuzzyPartition> {
    cfg.check(d.n())?;
    if init.len() != cfg.c {
        return Err(Error::Dimension {
            expected: cfg.c,
            got: init.len(),
        });
    }
    for (k, &j) in init.iter().enumerate() {
        if j >= d.n() || init[..k].contains(&j) {
            return Err(Error::domain(format!("invalid initial medoid {j}")));
        }
    }
    let run = run_from(d, cfg, init.to_vec());
    Ok(finish(d, cfg, run, Vec::new()))
}
