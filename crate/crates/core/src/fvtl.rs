//! First-visit quantities for a single vertex `u`: the kernel with `u`
//! deleted, its leading eigenvalue `λ_u`, the return mass `R_T(u)`, and how
//! closely the hitting time of `u` from stationarity follows the geometric
//! law `λ_u^t`.

use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, input, Error, Result};
use crate::generators::Seed;
use crate::graph::{Adjacency, VertexSet};
use crate::walk::{absorbing_survival, stationary, LazyKernel, ProbDist};

/// The lazy kernel with the row and column of `u` removed. Reduced indices
/// skip `u`: vertex `v` has index `v` below `u` and `v - 1` above it.
pub struct ReducedKernel<'a, G> {
    kernel: LazyKernel<'a, G>,
    u: usize,
}

impl<'a, G: Adjacency> ReducedKernel<'a, G> {
    pub fn new(g: &'a G, u: usize) -> Result<Self> {
        let n = g.order();
        if n < 2 {
            return domain("deleting a vertex needs at least two vertices");
        }
        if u >= n {
            return input(format!("vertex {u} outside 0..{n}"));
        }
        Ok(ReducedKernel {
            kernel: LazyKernel::new(g)?,
            u,
        })
    }

    pub fn dim(&self) -> usize {
        self.kernel.order() - 1
    }

    pub fn deleted(&self) -> usize {
        self.u
    }

    fn vertex(&self, i: usize) -> usize {
        if i < self.u {
            i
        } else {
            i + 1
        }
    }

    /// `P_u(i, j)` in reduced indices.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.kernel.transition(self.vertex(i), self.vertex(j))
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        let v = self.vertex(i);
        1.0 - self.kernel.transition(v, self.u)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let d = self.dim();
        (0..d)
            .map(|i| (0..d).map(|j| self.entry(i, j)).collect())
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeadingEigenvalue {
    pub lambda: f64,
    pub iterations: usize,
    /// `G - u` is disconnected, so `P_u` is reducible.
    pub reducible: bool,
}

const STRIDE: usize = 256;
pub const DEFAULT_TOL: f64 = 1e-10;
pub const LAMBDA_CAP: usize = 1_000_000;

fn connected_without<G: Adjacency>(g: &G, u: usize) -> bool {
    let n = g.order();
    if n <= 2 {
        return true;
    }
    let start = if u == 0 { 1 } else { 0 };
    let mut seen = vec![false; n];
    seen[u] = true;
    seen[start] = true;
    let mut stack = vec![start];
    let mut count = 1;
    while let Some(x) = stack.pop() {
        for &y in g.targets(x) {
            if !seen[y as usize] {
                seen[y as usize] = true;
                count += 1;
                stack.push(y as usize);
            }
        }
    }
    count == n - 1
}

/// Spectral radius of `P_u` by power iteration on the symmetric, positive
/// semidefinite matrix `D^{1/2} P_u D^{-1/2}` from a positive start. Stops
/// when the Rayleigh quotient moves less than `tol` over a stride and the
/// geometric extrapolation of the remaining movement is below `tol` too.
pub fn lambda_u<G: Adjacency>(g: &G, u: usize, tol: f64, cap: usize) -> Result<LeadingEigenvalue> {
    if !(tol > 0.0) {
        return input("tolerance must be positive");
    }
    let red = ReducedKernel::new(g, u)?;
    let kernel = &red.kernel;
    let n = g.order();
    let sqrt_deg: Vec<f64> = (0..n).map(|v| (g.degree(v) as f64).sqrt()).collect();
    let mut x = vec![1.0 / ((n - 1) as f64).sqrt(); n];
    x[u] = 0.0;
    let mut mu = vec![0.0; n];
    let mut next = vec![0.0; n];
    let mut scratch = vec![0.0; n];
    let mut mark = f64::NAN;
    let mut last_drift = f64::NAN;
    for it in 1..=cap {
        for v in 0..n {
            mu[v] = x[v] * sqrt_deg[v];
        }
        kernel.step_into(&mu, &mut next, &mut scratch);
        next[u] = 0.0;
        let mut dot = 0.0;
        let mut norm2 = 0.0;
        for v in 0..n {
            let y = next[v] / sqrt_deg[v];
            next[v] = y;
            dot += x[v] * y;
            norm2 += y * y;
        }
        let rho = dot;
        let norm = norm2.sqrt();
        if norm == 0.0 {
            return domain("reduced kernel annihilated the iterate");
        }
        for v in 0..n {
            x[v] = next[v] / norm;
        }
        if it % STRIDE == 0 {
            let drift = (rho - mark).abs();
            let ratio = drift / last_drift;
            let tail = if ratio.is_finite() && ratio < 1.0 {
                drift * ratio / (1.0 - ratio)
            } else {
                f64::INFINITY
            };
            if drift < tol && (tail < tol || drift == 0.0) {
                return Ok(LeadingEigenvalue {
                    lambda: rho,
                    iterations: it,
                    reducible: !connected_without(g, u),
                });
            }
            mark = rho;
            last_drift = drift;
        }
    }
    Err(Error::Cap {
        what: "leading eigenvalue of the reduced kernel",
        cap,
    })
}

/// `R_T(u) = Σ_{t=0}^{T} μ_t^u(u)` for the walk started at `u`.
pub fn returns_rt<G: Adjacency>(g: &G, u: usize, t: usize) -> Result<f64> {
    let n = g.order();
    if u >= n {
        return input(format!("vertex {u} outside 0..{n}"));
    }
    let kernel = LazyKernel::new(g)?;
    let mut mu = vec![0.0; n];
    mu[u] = 1.0;
    let mut next = vec![0.0; n];
    let mut scratch = vec![0.0; n];
    let mut total = 1.0;
    for _ in 0..t {
        kernel.step_into(&mu, &mut next, &mut scratch);
        std::mem::swap(&mut mu, &mut next);
        total += mu[u];
    }
    Ok(total)
}

/// `(1/n) Σ_v P[τ(δ_v, u) <= t0]`, from one absorbing evolution of the
/// uniform distribution.
pub fn low_hitting_mass<G: Adjacency>(g: &G, u: usize, t0: usize) -> Result<f64> {
    let n = g.order();
    if u >= n {
        return input(format!("vertex {u} outside 0..{n}"));
    }
    let kernel = LazyKernel::new(g)?;
    let mut absorbing = vec![false; n];
    absorbing[u] = true;
    let s = absorbing_survival(&kernel, &absorbing, ProbDist::uniform(n).as_slice(), t0);
    Ok(1.0 - s.survival[t0])
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixingDeviation {
    /// `max_{x,y} |μ_T^x(y) − π(y)|` over the starts examined.
    pub max_deviation: f64,
    pub threshold: f64,
    pub holds: bool,
    /// False when only a sample of starts was examined.
    pub exact: bool,
    pub starts: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hypotheses {
    pub hp1: MixingDeviation,
    /// `T · π_max`.
    pub hp2: f64,
    /// `T · π(u)`.
    pub hp2_prime: f64,
    /// `π_min · n²`.
    pub hp3: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FvtlReport {
    pub u: usize,
    #[serde(rename = "T")]
    pub t: usize,
    pub lambda_u: f64,
    pub lambda_iterations: usize,
    pub reducible: bool,
    #[serde(rename = "R_T")]
    pub r_t: f64,
    pub pi_u: f64,
    /// Largest `t` of the survival grid.
    pub grid_max: usize,
    /// `sup_t |P[τ(π, u) > t] / λ_u^t − 1|` over the grid.
    pub stat_hitting: f64,
    /// `|(1 − λ_u) / (π(u)/R_T) − 1|`.
    pub stat_prob: f64,
    pub hp: Hypotheses,
    /// `P[τ(π, u) > t]` on the grid.
    #[serde(skip)]
    pub survival: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FvtlOptions {
    /// Horizon `T`; `None` means `⌈(ln n)^6⌉`.
    pub t: Option<usize>,
    pub tol: f64,
    pub lambda_cap: usize,
    pub grid_cap: usize,
    /// Threshold for the mixing hypothesis; `None` means `n^{-3}`.
    pub hp1_threshold: Option<f64>,
    /// Largest `n·T·(n + 2e)` for which the mixing hypothesis is checked
    /// from every start (and only when `n <= 2000`); above it `hp1_sample`
    /// starts are used.
    pub hp1_exact_work: f64,
    pub hp1_sample: usize,
    pub seed: Seed,
}

impl Default for FvtlOptions {
    fn default() -> Self {
        FvtlOptions {
            t: None,
            tol: DEFAULT_TOL,
            lambda_cap: LAMBDA_CAP,
            grid_cap: 1_000_000,
            hp1_threshold: None,
            hp1_exact_work: 4e10,
            hp1_sample: 32,
            seed: Seed::new(0),
        }
    }
}

pub fn default_horizon(n: usize) -> usize {
    (n.max(2) as f64).ln().powi(6).ceil() as usize
}

fn mixing_deviation<G: Adjacency>(
    g: &G,
    pi: &ProbDist,
    t: usize,
    opts: &FvtlOptions,
) -> Result<MixingDeviation> {
    let n = g.order();
    let kernel = LazyKernel::new(g)?;
    let work = n as f64 * t.max(1) as f64 * (n + 2 * g.size()) as f64;
    let exact = n <= 2000 && work <= opts.hp1_exact_work;
    let starts: Vec<usize> = if exact || opts.hp1_sample >= n {
        (0..n).collect()
    } else {
        let mut s = index::sample(&mut opts.seed.rng(), n, opts.hp1_sample).into_vec();
        s.sort_unstable();
        s
    };
    let max_deviation = starts
        .par_iter()
        .map(|&x| {
            let mut mu = vec![0.0; n];
            mu[x] = 1.0;
            let mut next = vec![0.0; n];
            let mut scratch = vec![0.0; n];
            for _ in 0..t {
                kernel.step_into(&mu, &mut next, &mut scratch);
                std::mem::swap(&mut mu, &mut next);
            }
            mu.iter()
                .zip(pi.as_slice())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max);
    let threshold = opts.hp1_threshold.unwrap_or((n as f64).powi(-3));
    Ok(MixingDeviation {
        max_deviation,
        threshold,
        holds: max_deviation <= threshold,
        exact: starts.len() == n,
        starts: starts.len(),
    })
}

pub fn fvtl_report<G: Adjacency>(g: &G, u: usize, opts: &FvtlOptions) -> Result<FvtlReport> {
    let n = g.order();
    if u >= n {
        return input(format!("vertex {u} outside 0..{n}"));
    }
    let pi = stationary(g)?;
    let t = opts.t.unwrap_or_else(|| default_horizon(n));
    let hp1 = mixing_deviation(g, &pi, t, opts)?;
    report_with(g, u, &pi, t, hp1, opts)
}

fn report_with<G: Adjacency>(
    g: &G,
    u: usize,
    pi: &ProbDist,
    t: usize,
    hp1: MixingDeviation,
    opts: &FvtlOptions,
) -> Result<FvtlReport> {
    let n = g.order();
    if u >= n {
        return input(format!("vertex {u} outside 0..{n}"));
    }
    let lead = lambda_u(g, u, opts.tol, opts.lambda_cap)?;
    let lambda = lead.lambda;
    let r_t = returns_rt(g, u, t)?;
    let grid_max = ((20.0 / (1.0 - lambda)).ceil() as usize).min(opts.grid_cap);
    let kernel = LazyKernel::new(g)?;
    let mut absorbing = vec![false; n];
    absorbing[u] = true;
    let survival = absorbing_survival(&kernel, &absorbing, pi.as_slice(), grid_max).survival;
    let mut stat_hitting: f64 = 0.0;
    let mut lt = 1.0;
    for &s in &survival {
        stat_hitting = stat_hitting.max((s / lt - 1.0).abs());
        lt *= lambda;
    }
    let pi_u = pi[u];
    let stat_prob = ((1.0 - lambda) / (pi_u / r_t) - 1.0).abs();
    let hp = Hypotheses {
        hp1,
        hp2: t as f64 * pi.max(),
        hp2_prime: t as f64 * pi_u,
        hp3: pi.min() * (n * n) as f64,
    };
    Ok(FvtlReport {
        u,
        t,
        lambda_u: lambda,
        lambda_iterations: lead.iterations,
        reducible: lead.reducible,
        r_t,
        pi_u,
        grid_max,
        stat_hitting,
        stat_prob,
        hp,
        survival,
    })
}

/// Reports for several vertices. The mixing hypothesis does not depend on
/// the vertex and is evaluated once.
pub fn fvtl_reports<G: Adjacency>(
    g: &G,
    us: &VertexSet,
    opts: &FvtlOptions,
) -> Result<Vec<FvtlReport>> {
    us.check_range(g.order())?;
    let pi = stationary(g)?;
    let t = opts.t.unwrap_or_else(|| default_horizon(g.order()));
    let hp1 = mixing_deviation(g, &pi, t, opts)?;
    us.as_slice()
        .par_iter()
        .map(|&u| report_with(g, u as usize, &pi, t, hp1, opts))
        .collect()
}

/// `true` when removing `u` leaves the rest connected.
pub fn is_non_cut_vertex<G: Adjacency>(g: &G, u: usize) -> bool {
    connected_without(g, u)
}
