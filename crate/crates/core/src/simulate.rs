//! Generators for functional processes and the benchmark scenarios.
//!
//! All integral operators in these models have separable kernels
//! (`c1 exp(-c2 u^2) exp(-c2 v^2)` and `c u(1-u) v(1-v)`), so applying one to
//! a curve is a trapezoid-weighted inner product with the `v` factor followed
//! by multiplication with the `u` factor: `O(p)` per step instead of `O(p^2)`.
//!
//! Recursions start from zero curves (and `sigma^2 = 0.01` for fGARCH) and
//! discard `burn_in` iterates before the `T` kept ones.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fts::{FunctionalTimeSeries, Grid};
use crate::rng::{derive_seed, stream};

pub const DEFAULT_POINTS: usize = 100;
pub const DEFAULT_BURN_IN: usize = 100;
pub const UNEQUAL_LENGTHS: [usize; 5] = [200, 300, 400, 500, 600];
const FGARCH_DELTA: f64 = 0.01;
const NONLINEAR_GUARD: f64 = 50.0;

/// Standard Brownian motion on the grid, multiplied by `scale`.
pub fn brownian_curve<R: Rng + ?Sized>(grid: &Grid, scale: f64, rng: &mut R) -> Vec<f64> {
    let u = grid.points();
    let mut out = Vec::with_capacity(u.len());
    let mut b = 0.0;
    out.push(0.0);
    for w in u.windows(2) {
        let z: f64 = StandardNormal.sample(rng);
        b += z * (w[1] - w[0]).sqrt();
        out.push(scale * b);
    }
    out
}

/// fGARCH innovation `sqrt(ln 2) 2^(-200u) B(2^(400u) / ln 2)`.
///
/// With `s(u) = 2^(400u)/ln 2` the curve is `B(s)/sqrt(s)`, an AR(1) in `u`:
/// `e_j = sqrt(r) e_{j-1} + sqrt(1-r) z_j` with `r = s_{j-1}/s_j =
/// 2^(-400 (u_j - u_{j-1}))`. This samples the Brownian motion at the
/// transformed times through independent increments without forming the
/// huge times themselves.
pub fn fgarch_innovation<R: Rng + ?Sized>(grid: &Grid, rng: &mut R) -> Vec<f64> {
    let u = grid.points();
    let mut out = Vec::with_capacity(u.len());
    let mut e: f64 = StandardNormal.sample(rng);
    out.push(e);
    for w in u.windows(2) {
        let r = (-400.0 * (w[1] - w[0]) * std::f64::consts::LN_2).exp();
        let z: f64 = StandardNormal.sample(rng);
        e = r.sqrt() * e + (1.0 - r).sqrt() * z;
        out.push(e);
    }
    out
}

/// Rank-one kernel `k(u, v) = a(u) b(v)` discretised on a grid.
struct SeparableKernel {
    outer: Vec<f64>,
    /// `b(v_j) w_j`
    inner_weights: Vec<f64>,
}

impl SeparableKernel {
    fn new(grid: &Grid, outer: impl Fn(f64) -> f64, inner_factor: impl Fn(f64) -> f64) -> Self {
        let w = grid.trapezoid_weights();
        let u = grid.points();
        Self {
            outer: u.iter().map(|&x| outer(x)).collect(),
            inner_weights: u.iter().zip(&w).map(|(&v, w)| inner_factor(v) * w).collect(),
        }
    }

    /// Exponential kernel `c1 exp(-c2 (u^2 + v^2))`.
    fn exponential(grid: &Grid, c1: f64, c2: f64) -> Self {
        Self::new(grid, |u| c1 * (-c2 * u * u).exp(), |v| (-c2 * v * v).exp())
    }

    fn apply_scalar(&self, f: &[f64]) -> f64 {
        self.inner_weights.iter().zip(f).map(|(a, b)| a * b).sum()
    }

    fn apply(&self, f: &[f64]) -> Vec<f64> {
        let s = self.apply_scalar(f);
        self.outer.iter().map(|a| a * s).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum Process {
    /// `X_t = G1 X_{t-1} + G2 X_{t-2} + e_t` with exponential kernels.
    Far2 { c: [f64; 4] },
    /// `X_t = 0.75 G exp(G) + e_t`, `G = G1 X_{t-1}`.
    NonlinearFar1 { c: [f64; 2] },
    /// `X_t = sigma_t e_t`, `sigma_t^2 = 0.01 + a X_{t-1}^2 + b sigma_{t-1}^2`.
    Fgarch11 { c: f64 },
    /// Independent Brownian curves.
    BrownianNoise,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimSettings {
    pub len: usize,
    pub points: usize,
    pub burn_in: usize,
    /// Scale of the Brownian noise; `None` means `1/sqrt(len)`, i.e. variance
    /// `1/T` at `u = 1`.
    pub noise_scale: Option<f64>,
}

impl SimSettings {
    pub fn new(len: usize, points: usize) -> Self {
        Self {
            len,
            points,
            burn_in: DEFAULT_BURN_IN,
            noise_scale: None,
        }
    }

    fn noise(&self) -> f64 {
        self.noise_scale.unwrap_or(1.0 / (self.len as f64).sqrt())
    }
}

impl Process {
    pub fn simulate<R: Rng + ?Sized>(&self, settings: &SimSettings, rng: &mut R) -> Result<FunctionalTimeSeries> {
        let grid = Grid::uniform(settings.points)?;
        let (t, burn) = (settings.len, settings.burn_in);
        let min_len = match self {
            Process::Far2 { .. } => 3,
            Process::NonlinearFar1 { .. } | Process::Fgarch11 { .. } => 2,
            Process::BrownianNoise => 1,
        };
        if t < min_len {
            return Err(Error::domain(format!("{self:?} needs T >= {min_len}, got {t}")));
        }
        let scale = settings.noise();
        let p = grid.len();
        let mut out = Vec::with_capacity(t * p);
        let mut keep = |step: usize, curve: &[f64]| {
            if step >= burn {
                out.extend_from_slice(curve);
            }
        };

        match *self {
            Process::Far2 { c } => {
                let k1 = SeparableKernel::exponential(&grid, c[0], c[1]);
                let k2 = SeparableKernel::exponential(&grid, c[2], c[3]);
                let mut prev2 = vec![0.0; p];
                let mut prev1 = vec![0.0; p];
                for step in 0..burn + t {
                    let e = brownian_curve(&grid, scale, rng);
                    let (s1, s2) = (k1.apply_scalar(&prev1), k2.apply_scalar(&prev2));
                    let x: Vec<f64> = (0..p)
                        .map(|j| k1.outer[j] * s1 + k2.outer[j] * s2 + e[j])
                        .collect();
                    keep(step, &x);
                    prev2 = std::mem::replace(&mut prev1, x);
                }
            }
            Process::NonlinearFar1 { c } => {
                let k = SeparableKernel::exponential(&grid, c[0], c[1]);
                let mut prev = vec![0.0; p];
                for step in 0..burn + t {
                    let e = brownian_curve(&grid, scale, rng);
                    let g = k.apply(&prev);
                    let peak = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                    if peak > NONLINEAR_GUARD {
                        return Err(Error::Stability { t: step, magnitude: peak });
                    }
                    let x: Vec<f64> = g.iter().zip(&e).map(|(g, e)| 0.75 * g * g.exp() + e).collect();
                    keep(step, &x);
                    prev = x;
                }
            }
            Process::Fgarch11 { c } => {
                let k = SeparableKernel::new(&grid, |u| c * u * (1.0 - u), |v| v * (1.0 - v));
                let mut sigma2 = vec![FGARCH_DELTA; p];
                let mut x: Vec<f64> = fgarch_innovation(&grid, rng)
                    .iter()
                    .zip(&sigma2)
                    .map(|(e, s)| s.sqrt() * e)
                    .collect();
                for step in 0..burn + t {
                    let x2: Vec<f64> = x.iter().map(|v| v * v).collect();
                    let s = k.apply_scalar(&x2) + k.apply_scalar(&sigma2);
                    sigma2 = k.outer.iter().map(|a| FGARCH_DELTA + a * s).collect();
                    debug_assert!(sigma2.iter().all(|&s| s >= FGARCH_DELTA));
                    let e = fgarch_innovation(&grid, rng);
                    x = sigma2.iter().zip(&e).map(|(s, e)| s.sqrt() * e).collect();
                    keep(step, &x);
                }
            }
            Process::BrownianNoise => {
                for step in 0..burn + t {
                    let e = brownian_curve(&grid, scale, rng);
                    keep(step, &e);
                }
            }
        }
        FunctionalTimeSeries::new(out, grid)
    }
}

fn simulate_seeded(process: Process, t: usize, p: usize, seed: u64, burn_in: usize) -> Result<FunctionalTimeSeries> {
    let settings = SimSettings {
        burn_in,
        ..SimSettings::new(t, p)
    };
    process.simulate(&settings, &mut stream(seed, 0))
}

pub fn far2(c: [f64; 4], t: usize, p: usize, seed: u64, burn_in: usize) -> Result<FunctionalTimeSeries> {
    simulate_seeded(Process::Far2 { c }, t, p, seed, burn_in)
}

pub fn nonlinear_far1(c: [f64; 2], t: usize, p: usize, seed: u64, burn_in: usize) -> Result<FunctionalTimeSeries> {
    simulate_seeded(Process::NonlinearFar1 { c }, t, p, seed, burn_in)
}

pub fn fgarch11(c: f64, t: usize, p: usize, seed: u64, burn_in: usize) -> Result<FunctionalTimeSeries> {
    simulate_seeded(Process::Fgarch11 { c }, t, p, seed, burn_in)
}

/// Ground-truth label of a simulated series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Label {
    Cluster(u32),
    Isolated,
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Cluster(c) => write!(f, "{c}"),
            Label::Isolated => f.write_str("isolated"),
        }
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "isolated" {
            return Ok(Label::Isolated);
        }
        s.parse()
            .map(Label::Cluster)
            .map_err(|_| Error::domain(format!("invalid label {s:?}")))
    }
}

impl From<Label> for String {
    fn from(l: Label) -> Self {
        l.to_string()
    }
}

impl TryFrom<String> for Label {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

/// Generating process and label of each series in a scenario.
pub fn scenario_design(id: u8) -> Result<Vec<(Process, Label)>> {
    let block = |p: Process, c: u32| std::iter::repeat_n((p, Label::Cluster(c)), 5);
    let far = |c: [f64; 4]| Process::Far2 { c };
    let design: Vec<(Process, Label)> = match id {
        1 => block(far([-0.3, 0.1, 0.0, 0.0]), 1)
            .chain(block(far([0.3, 0.3, 0.0, 0.0]), 2))
            .chain(block(far([-0.4, 0.5, -0.3, 0.5]), 3))
            .chain(block(far([0.4, 0.7, 0.3, 0.7]), 4))
            .collect(),
        2 => block(Process::NonlinearFar1 { c: [0.5, 0.5] }, 1)
            .chain(block(Process::NonlinearFar1 { c: [0.9, 0.5] }, 2))
            .chain(block(Process::Fgarch11 { c: 14.0 }, 3))
            .chain(block(Process::Fgarch11 { c: 15.0 }, 4))
            .collect(),
        3 => block(far([-0.4, 0.5, -0.4, 0.5]), 1)
            .chain(block(far([0.4, 0.5, 0.4, 0.5]), 2))
            .chain(std::iter::once((Process::BrownianNoise, Label::Isolated)))
            .collect(),
        4 => block(Process::NonlinearFar1 { c: [0.9, 0.5] }, 1)
            .chain(block(Process::Fgarch11 { c: 14.0 }, 2))
            .chain(std::iter::once((Process::BrownianNoise, Label::Isolated)))
            .collect(),
        _ => return Err(Error::domain(format!("unknown scenario {id} (expected 1-4)"))),
    };
    Ok(design)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Lengths {
    Fixed(usize),
    /// Each series draws its length uniformly from the list.
    Random(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioOptions {
    pub lengths: Lengths,
    pub points: usize,
    pub burn_in: usize,
}

impl ScenarioOptions {
    pub fn fixed(len: usize, points: usize) -> Self {
        Self {
            lengths: Lengths::Fixed(len),
            points,
            burn_in: DEFAULT_BURN_IN,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioDataset {
    pub scenario_id: u8,
    pub seed: u64,
    pub series: Vec<FunctionalTimeSeries>,
    pub labels: Vec<Label>,
    pub processes: Vec<Process>,
}

/// Simulates a benchmark scenario. Series `i` uses its own random stream
/// derived from `(seed, i)`.
pub fn make_scenario_with(id: u8, opts: &ScenarioOptions, seed: u64) -> Result<ScenarioDataset> {
    let design = scenario_design(id)?;
    let mut length_rng = stream(derive_seed(seed, u64::MAX), 0);
    let mut series = Vec::with_capacity(design.len());
    for (i, (process, _)) in design.iter().enumerate() {
        let len = match &opts.lengths {
            Lengths::Fixed(t) => *t,
            Lengths::Random(choices) => {
                if choices.is_empty() {
                    return Err(Error::domain("no lengths to draw from"));
                }
                choices[length_rng.random_range(0..choices.len())]
            }
        };
        let settings = SimSettings {
            burn_in: opts.burn_in,
            ..SimSettings::new(len, opts.points)
        };
        let x = process
            .simulate(&settings, &mut stream(seed, i as u64))
            .map_err(|e| e.in_series(i))?;
        series.push(x);
    }
    Ok(ScenarioDataset {
        scenario_id: id,
        seed,
        series,
        labels: design.iter().map(|d| d.1).collect(),
        processes: design.iter().map(|d| d.0).collect(),
    })
}

pub fn make_scenario(id: u8, t: usize, p: usize, seed: u64) -> Result<ScenarioDataset> {
    make_scenario_with(id, &ScenarioOptions::fixed(t, p), seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fqa::fqa_autocorrelation;

    fn sample_var(xs: &[f64]) -> f64 {
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)
    }

    #[test]
    fn brownian_moments() {
        let grid = Grid::uniform(11).unwrap();
        let mut rng = stream(5, 0);
        let draws: Vec<Vec<f64>> = (0..10_000).map(|_| brownian_curve(&grid, 1.0, &mut rng)).collect();
        assert!(draws.iter().all(|d| d[0] == 0.0));
        let end: Vec<f64> = draws.iter().map(|d| d[10]).collect();
        assert!((sample_var(&end) - 1.0).abs() < 0.05);
        // increments over [0, 0.5] and [0.5, 1]
        let a: Vec<f64> = draws.iter().map(|d| d[5]).collect();
        let b: Vec<f64> = draws.iter().map(|d| d[10] - d[5]).collect();
        let (ma, mb) = (a.iter().sum::<f64>() / 1e4, b.iter().sum::<f64>() / 1e4);
        let cov: f64 = a.iter().zip(&b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / 1e4;
        let corr = cov / (sample_var(&a) * sample_var(&b)).sqrt();
        assert!(corr.abs() < 0.05, "{corr}");
    }

    #[test]
    fn fgarch_innovation_is_unit_variance_and_gaussian() {
        let grid = Grid::uniform(100).unwrap();
        let mut rng = stream(2024, 0);
        let draws: Vec<Vec<f64>> = (0..10_000).map(|_| fgarch_innovation(&grid, &mut rng)).collect();
        for j in [0, 1, 50, 98, 99] {
            let col: Vec<f64> = draws.iter().map(|d| d[j]).collect();
            let v = sample_var(&col);
            assert!((v - 1.0).abs() < 0.05, "u index {j}: {v}");
            let m = col.iter().sum::<f64>() / col.len() as f64;
            let kurt = col.iter().map(|x| (x - m).powi(4)).sum::<f64>() / col.len() as f64 / v.powi(2);
            assert!((kurt - 3.0).abs() < 0.5, "u index {j}: kurtosis {kurt}");
        }
    }

    #[test]
    fn zero_coefficients_give_white_noise() {
        let x = far2([0.0; 4], 1000, 20, 3, 10).unwrap();
        assert!(fqa_autocorrelation(&x, 0.5, 0.5, 1, 0.5, 0.5).unwrap().abs() < 0.1);
        let y = nonlinear_far1([0.0, 0.0], 50, 20, 3, 10).unwrap();
        let n = SimSettings {
            burn_in: 10,
            ..SimSettings::new(50, 20)
        };
        let z = Process::BrownianNoise.simulate(&n, &mut stream(3, 0)).unwrap();
        // c = 0 reduces the nonlinear recursion to its noise term
        assert_eq!(y, z);
    }

    #[test]
    fn fgarch_variance_floor() {
        let x = fgarch11(15.0, 300, 50, 1, 50).unwrap();
        assert_eq!(x.len(), 300);
        assert!(x.values().iter().all(|v| v.is_finite()));
    }

    #[test]
    fn nonlinear_paths_stay_bounded() {
        for c in [[0.5, 0.5], [0.9, 0.5]] {
            let x = nonlinear_far1(c, 600, 100, 11, 100).unwrap();
            let peak = x.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
            assert!(peak < 10.0, "{peak}");
        }
    }

    #[test]
    fn scenario_shapes() {
        let d = make_scenario(1, 20, 10, 0).unwrap();
        assert_eq!(d.series.len(), 20);
        let expected: Vec<Label> = (1..=4).flat_map(|c| [Label::Cluster(c); 5]).collect();
        assert_eq!(d.labels, expected);
        assert!(d.series.iter().all(|x| x.len() == 20 && x.n_points() == 10));

        let d3 = make_scenario(3, 20, 10, 0).unwrap();
        assert_eq!(d3.series.len(), 11);
        assert_eq!(d3.labels[10], Label::Isolated);
        assert!(matches!(make_scenario(7, 20, 10, 0), Err(Error::Domain(_))));
    }

    #[test]
    fn scenarios_are_deterministic() {
        for id in 1..=4 {
            assert_eq!(make_scenario(id, 30, 12, 99).unwrap(), make_scenario(id, 30, 12, 99).unwrap());
        }
        assert_ne!(make_scenario(2, 30, 12, 1).unwrap(), make_scenario(2, 30, 12, 2).unwrap());
    }

    #[test]
    fn unequal_lengths_drawn_from_list() {
        let opts = ScenarioOptions {
            lengths: Lengths::Random(UNEQUAL_LENGTHS.to_vec()),
            points: 8,
            burn_in: 10,
        };
        let d = make_scenario_with(1, &opts, 4).unwrap();
        assert!(d.series.iter().all(|x| UNEQUAL_LENGTHS.contains(&x.len())));
        let distinct: std::collections::BTreeSet<usize> = d.series.iter().map(|x| x.len()).collect();
        assert!(distinct.len() > 1);
    }

    #[test]
    fn generated_series_look_stationary() {
        // first and second halves agree in mean, pooled over all columns
        let d = make_scenario(2, 400, 20, 8).unwrap();
        let (mut ok, mut total) = (0, 0);
        for x in &d.series {
            let half = x.len() / 2;
            for j in 1..x.n_points() {
                let col = x.column(j);
                let (a, b) = col.split_at(half);
                let (ma, mb) = (a.iter().sum::<f64>() / a.len() as f64, b.iter().sum::<f64>() / b.len() as f64);
                let se = ((sample_var(a) / a.len() as f64) + (sample_var(b) / b.len() as f64)).sqrt();
                ok += usize::from((ma - mb).abs() < 3.0 * se);
                total += 1;
            }
        }
        assert!(ok as f64 >= 0.9 * total as f64, "{ok}/{total}");
    }

    #[test]
    fn label_strings() {
        assert_eq!(serde_json::to_string(&Label::Cluster(3)).unwrap(), "\"3\"");
        assert_eq!(serde_json::to_string(&Label::Isolated).unwrap(), "\"isolated\"");
        assert_eq!("isolated".parse::<Label>().unwrap(), Label::Isolated);
        assert!("x".parse::<Label>().is_err());
    }
}
