//! The lazy random walk: kernel, stationary law, exact distribution
//! evolution, worst-start and average-start mixing times, absorbing hitting
//! curves, trajectory simulation and the ball-growth lower bound.

use std::collections::VecDeque;

use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, input, Result};
use crate::generators::Seed;
use crate::graph::{is_connected, Adjacency, VertexSet};

/// A probability vector over `0..n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ProbDist(Vec<f64>);

impl ProbDist {
    pub const SUM_TOL: f64 = 1e-9;

    pub fn new(values: Vec<f64>) -> Result<ProbDist> {
        if values.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
            return input("probability vector has a negative or non-finite entry");
        }
        let s: f64 = values.iter().sum();
        if (s - 1.0).abs() > Self::SUM_TOL {
            return input(format!("probability vector sums to {s}"));
        }
        Ok(ProbDist(values))
    }

    pub fn delta(n: usize, v: usize) -> Result<ProbDist> {
        if v >= n {
            return input(format!("vertex {v} outside 0..{n}"));
        }
        let mut x = vec![0.0; n];
        x[v] = 1.0;
        Ok(ProbDist(x))
    }

    pub fn uniform(n: usize) -> ProbDist {
        ProbDist(vec![1.0 / n as f64; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn min(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(0.0, f64::max)
    }

    pub fn mass(&self, s: &VertexSet) -> f64 {
        s.iter()
            .filter(|&v| v < self.len())
            .map(|v| self.0[v])
            .sum()
    }
}

impl std::ops::Index<usize> for ProbDist {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Transition operator of the lazy walk: stay with probability 1/2,
/// otherwise move along a uniformly chosen edge (multiplicity counts).
#[derive(Clone, Debug)]
pub struct LazyKernel<'a, G> {
    graph: &'a G,
    half_inv_deg: Vec<f64>,
}

impl<'a, G: Adjacency> LazyKernel<'a, G> {
    pub fn new(graph: &'a G) -> Result<Self> {
        if graph.order() == 0 {
            return domain("lazy walk on the null graph");
        }
        if let Some(v) = (0..graph.order()).find(|&v| graph.degree(v) == 0) {
            return domain(format!(
                "vertex {v} is isolated; the lazy kernel is undefined"
            ));
        }
        let half_inv_deg = (0..graph.order())
            .map(|v| 0.5 / graph.degree(v) as f64)
            .collect();
        Ok(LazyKernel {
            graph,
            half_inv_deg,
        })
    }

    pub fn graph(&self) -> &'a G {
        self.graph
    }

    pub fn order(&self) -> usize {
        self.graph.order()
    }

    /// `P(i, j)` as an exact fraction `(numerator, denominator)`.
    pub fn transition_exact(&self, i: usize, j: usize) -> (u64, u64) {
        if i == j {
            (1, 2)
        } else {
            (
                self.graph.multiplicity(i, j) as u64,
                2 * self.graph.degree(i) as u64,
            )
        }
    }

    pub fn transition(&self, i: usize, j: usize) -> f64 {
        let (a, b) = self.transition_exact(i, j);
        a as f64 / b as f64
    }

    /// `out = mu · P`. `scratch` must have length `n`.
    pub fn step_into(&self, mu: &[f64], out: &mut [f64], scratch: &mut [f64]) {
        for ((w, &m), &h) in scratch.iter_mut().zip(mu).zip(&self.half_inv_deg) {
            *w = m * h;
        }
        for (j, o) in out.iter_mut().enumerate() {
            let mut acc = 0.5 * mu[j];
            match self.graph.multiplicities(j) {
                None => {
                    for &i in self.graph.targets(j) {
                        acc += scratch[i as usize];
                    }
                }
                Some(mult) => {
                    for (&i, &c) in self.graph.targets(j).iter().zip(mult) {
                        acc += c as f64 * scratch[i as usize];
                    }
                }
            }
            *o = acc;
        }
    }

    pub fn step(&self, mu: &ProbDist) -> Result<ProbDist> {
        if mu.len() != self.order() {
            return input(format!(
                "distribution has length {} but the graph has {} vertices",
                mu.len(),
                self.order()
            ));
        }
        let n = self.order();
        let mut out = vec![0.0; n];
        let mut scratch = vec![0.0; n];
        self.step_into(mu.as_slice(), &mut out, &mut scratch);
        Ok(ProbDist(out))
    }
}

/// `π_G(v) = deg(v) / 2e(G)`.
pub fn stationary<G: Adjacency>(g: &G) -> Result<ProbDist> {
    if g.size() == 0 {
        return domain("stationary distribution needs at least one edge");
    }
    if !is_connected(g) {
        return domain("graph is disconnected; the stationary distribution is not unique");
    }
    let two_m = 2.0 * g.size() as f64;
    Ok(ProbDist(
        (0..g.order()).map(|v| g.degree(v) as f64 / two_m).collect(),
    ))
}

fn tv_slices(mu: &[f64], nu: &[f64]) -> f64 {
    0.5 * mu.iter().zip(nu).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Half the L1 distance.
pub fn tv_distance(mu: &ProbDist, nu: &ProbDist) -> Result<f64> {
    if mu.len() != nu.len() {
        return input("distributions live on different index sets");
    }
    Ok(tv_slices(mu.as_slice(), nu.as_slice()))
}

/// Default step cap `50 (ln n)^2`.
pub fn default_t_cap(n: usize) -> usize {
    let l = (n.max(2) as f64).ln();
    (50.0 * l * l).ceil() as usize
}

/// Which starting vertices a mixing computation evolves.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum StartSelection {
    /// Every vertex; the result is the exact mixing time.
    All,
    /// `count` uniform starts without replacement.
    Sampled { count: usize, seed: Seed },
    /// Structurally chosen likely-worst starts (slow-mode extremes, vertices
    /// deep inside degree-two stretches) topped up with uniform ones. The
    /// worst-start time over them is a lower bound on the true mixing time.
    Candidates { count: usize, seed: Seed },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MixingMode {
    Exact,
    Sampled,
    Candidates,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MixingStatus {
    Mixed,
    /// `t_cap` was reached before the TV criterion was met.
    Capped,
}

/// TV-to-stationarity curves over `t = 0..len`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MixingCurve {
    pub max_tv: Vec<f64>,
    pub mean_tv: Vec<f64>,
    pub sem: Vec<f64>,
}

impl MixingCurve {
    pub fn len(&self) -> usize {
        self.max_tv.len()
    }

    pub fn is_empty(&self) -> bool {
        self.max_tv.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixingReport {
    pub eps: f64,
    /// First `t` meeting the criterion; `None` when capped.
    pub t: Option<usize>,
    pub status: MixingStatus,
    pub t_cap: usize,
    pub mode: MixingMode,
    /// True when `t` is the exact value over all starts.
    pub rigorous: bool,
    pub starts: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub curve: Option<MixingCurve>,
}

impl MixingReport {
    pub fn has_curve(&self) -> bool {
        self.curve.is_some()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixingOptions {
    pub eps: f64,
    pub t_cap: Option<usize>,
    pub starts: StartSelection,
    /// Keep the full TV curves (all starts extended to the reported time).
    pub curve: bool,
}

impl Default for MixingOptions {
    fn default() -> Self {
        MixingOptions {
            eps: 0.25,
            t_cap: None,
            starts: StartSelection::All,
            curve: false,
        }
    }
}

/// Evolves `δ_start` recording `d_TV(μ_t, π)`; stops at the first `t >= min_t`
/// with TV `<= eps`, or at `cap`.
fn tv_trajectory<G: Adjacency>(
    kernel: &LazyKernel<'_, G>,
    pi: &[f64],
    start: usize,
    eps: f64,
    min_t: usize,
    cap: usize,
) -> Vec<f64> {
    let n = kernel.order();
    let mut mu = vec![0.0; n];
    mu[start] = 1.0;
    let mut next = vec![0.0; n];
    let mut scratch = vec![0.0; n];
    let mut curve = vec![tv_slices(&mu, pi)];
    let mut t = 0;
    while t < cap && !(t >= min_t && curve[t] <= eps) {
        kernel.step_into(&mu, &mut next, &mut scratch);
        std::mem::swap(&mut mu, &mut next);
        t += 1;
        let tv = tv_slices(&mu, pi);
        debug_assert!(tv <= curve[t - 1] + 1e-12, "TV increased along the walk");
        curve.push(tv);
    }
    curve
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Target {
    Worst,
    Mean,
}

struct Evolution {
    curves: Vec<Vec<f64>>,
    t: Option<usize>,
}

/// Worst criterion: each start runs until its own TV drops to `eps` (TV is
/// non-increasing for the lazy walk), and `t` is the largest crossing time.
/// Mean criterion: all starts advance together in rounds until the mean
/// curve crosses.
fn evolve<G: Adjacency>(
    kernel: &LazyKernel<'_, G>,
    pi: &[f64],
    starts: &[usize],
    eps: f64,
    cap: usize,
    target: Target,
    keep_curve: bool,
) -> Evolution {
    if target == Target::Mean {
        return evolve_mean(kernel, pi, starts, eps, cap, keep_curve);
    }
    let mut curves: Vec<Vec<f64>> = starts
        .par_iter()
        .map(|&s| tv_trajectory(kernel, pi, s, eps, 0, cap))
        .collect();
    let longest = curves.iter().map(Vec::len).max().unwrap_or(1) - 1;
    let t = curves
        .iter()
        .all(|c| *c.last().unwrap() <= eps)
        .then_some(longest);
    if keep_curve {
        extend(kernel, pi, starts, &mut curves, longest);
    }
    Evolution { curves, t }
}

/// Above this many bytes of per-start state, walkers restart each round.
const RETAIN_BYTES: usize = 1 << 30;

struct Walker {
    start: usize,
    mu: Vec<f64>,
    next: Vec<f64>,
    curve: Vec<f64>,
}

impl Walker {
    fn advance<G: Adjacency>(
        &mut self,
        kernel: &LazyKernel<'_, G>,
        pi: &[f64],
        to: usize,
        scratch: &mut [f64],
    ) {
        let n = kernel.order();
        if self.mu.is_empty() {
            self.mu = vec![0.0; n];
            self.mu[self.start] = 1.0;
            self.next = vec![0.0; n];
            self.curve = vec![tv_slices(&self.mu, pi)];
        }
        while self.curve.len() <= to {
            kernel.step_into(&self.mu, &mut self.next, scratch);
            std::mem::swap(&mut self.mu, &mut self.next);
            self.curve.push(tv_slices(&self.mu, pi));
        }
    }
}

fn evolve_mean<G: Adjacency>(
    kernel: &LazyKernel<'_, G>,
    pi: &[f64],
    starts: &[usize],
    eps: f64,
    cap: usize,
    keep_curve: bool,
) -> Evolution {
    let n = kernel.order();
    let k = starts.len() as f64;
    let retain = starts.len().saturating_mul(n).saturating_mul(16) <= RETAIN_BYTES;
    let mut walkers: Vec<Walker> = starts
        .iter()
        .map(|&start| Walker {
            start,
            mu: Vec::new(),
            next: Vec::new(),
            curve: Vec::new(),
        })
        .collect();
    let mut done = 0;
    let mut h = cap.min(32);
    let t = loop {
        walkers.par_iter_mut().for_each_init(
            || vec![0.0; n],
            |scratch, w| {
                w.advance(kernel, pi, h, scratch);
                if !retain {
                    w.mu = Vec::new();
                    w.next = Vec::new();
                }
            },
        );
        let found =
            (done..=h).find(|&t| walkers.iter().map(|w| w.curve[t]).sum::<f64>() / k <= eps);
        if found.is_some() || h == cap {
            break found;
        }
        done = h + 1;
        h = if retain { h + (h / 4).max(32) } else { 2 * h }.min(cap);
    };
    let mut curves: Vec<Vec<f64>> = walkers.into_iter().map(|w| w.curve).collect();
    if keep_curve {
        let end = t.unwrap_or(cap);
        curves.iter_mut().for_each(|c| c.truncate(end + 1));
    }
    Evolution { curves, t }
}

fn extend<G: Adjacency>(
    kernel: &LazyKernel<'_, G>,
    pi: &[f64],
    starts: &[usize],
    curves: &mut [Vec<f64>],
    horizon: usize,
) {
    curves
        .par_iter_mut()
        .zip(starts.par_iter())
        .filter(|(c, _)| c.len() <= horizon)
        .for_each(|(c, &s)| *c = tv_trajectory(kernel, pi, s, -1.0, horizon, horizon));
}

fn summarize(curves: &[Vec<f64>], with_sem: bool) -> MixingCurve {
    let len = curves.iter().map(Vec::len).min().unwrap_or(0);
    let k = curves.len() as f64;
    let mut out = MixingCurve::default();
    for t in 0..len {
        let mut max = 0.0f64;
        let mut sum = 0.0;
        for c in curves {
            max = max.max(c[t]);
            sum += c[t];
        }
        let mean = sum / k;
        let sem = if with_sem && curves.len() > 1 {
            let var = curves.iter().map(|c| (c[t] - mean).powi(2)).sum::<f64>() / (k - 1.0);
            (var / k).sqrt()
        } else {
            0.0
        };
        out.max_tv.push(max);
        out.mean_tv.push(mean);
        out.sem.push(sem);
    }
    out
}

/// Resolves a [`StartSelection`] to a sorted start list.
pub fn select_starts<G: Adjacency>(g: &G, sel: &StartSelection) -> Result<Vec<usize>> {
    let n = g.order();
    Ok(match sel {
        StartSelection::All => (0..n).collect(),
        StartSelection::Sampled { count, seed } => {
            if *count == 0 {
                return input("sample size must be positive");
            }
            if *count >= n {
                (0..n).collect()
            } else {
                let mut v = index::sample(&mut seed.rng(), n, *count).into_vec();
                v.sort_unstable();
                v
            }
        }
        StartSelection::Candidates { count, seed } => candidate_starts(g, *count, *seed)?,
    })
}

fn run_mixing<G: Adjacency>(g: &G, opts: &MixingOptions, target: Target) -> Result<MixingReport> {
    if !(opts.eps > 0.0 && opts.eps < 1.0) {
        return input(format!("eps = {} must lie in (0, 1)", opts.eps));
    }
    let pi = stationary(g)?;
    let kernel = LazyKernel::new(g)?;
    let cap = opts.t_cap.unwrap_or_else(|| default_t_cap(g.order()));
    let starts = select_starts(g, &opts.starts)?;
    let ev = evolve(
        &kernel,
        pi.as_slice(),
        &starts,
        opts.eps,
        cap,
        target,
        opts.curve,
    );
    let mode = match opts.starts {
        StartSelection::All => MixingMode::Exact,
        StartSelection::Sampled { .. } => MixingMode::Sampled,
        StartSelection::Candidates { .. } => MixingMode::Candidates,
    };
    let exact = starts.len() == g.order();
    Ok(MixingReport {
        eps: opts.eps,
        t: ev.t,
        status: if ev.t.is_some() {
            MixingStatus::Mixed
        } else {
            MixingStatus::Capped
        },
        t_cap: cap,
        mode: if exact { MixingMode::Exact } else { mode },
        rigorous: exact,
        starts: starts.len(),
        curve: opts.curve.then(|| summarize(&ev.curves, !exact)),
    })
}

/// Worst-start mixing time `t_mix(G, eps)`.
pub fn mixing_time<G: Adjacency>(g: &G, eps: f64, t_cap: Option<usize>) -> Result<MixingReport> {
    mixing_time_with(
        g,
        &MixingOptions {
            eps,
            t_cap,
            ..Default::default()
        },
    )
}

pub fn mixing_time_with<G: Adjacency>(g: &G, opts: &MixingOptions) -> Result<MixingReport> {
    run_mixing(g, opts, Target::Worst)
}

/// How the average over starts is formed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AvgMode {
    Exact,
    Sampled,
}

/// Average-start mixing time `t̄_mix(G, eps)`.
pub fn avg_mixing_time<G: Adjacency>(
    g: &G,
    eps: f64,
    mode: AvgMode,
    sample_size: usize,
    seed: Seed,
    t_cap: Option<usize>,
) -> Result<MixingReport> {
    let starts = match mode {
        AvgMode::Exact => StartSelection::All,
        AvgMode::Sampled => StartSelection::Sampled {
            count: sample_size,
            seed,
        },
    };
    avg_mixing_time_with(
        g,
        &MixingOptions {
            eps,
            t_cap,
            starts,
            curve: mode == AvgMode::Sampled,
        },
    )
}

pub fn avg_mixing_time_with<G: Adjacency>(g: &G, opts: &MixingOptions) -> Result<MixingReport> {
    run_mixing(g, opts, Target::Mean)
}

/// Likely-worst starting vertices for the worst-start search on graphs too
/// large to evolve every start.
///
/// A third of the budget goes to the extremes of an approximate slowest
/// mode of the walk, a third to vertices farthest from any vertex of degree
/// at least three, and the rest to uniform samples.
pub fn candidate_starts<G: Adjacency>(g: &G, count: usize, seed: Seed) -> Result<Vec<usize>> {
    let n = g.order();
    if count == 0 {
        return input("candidate count must be positive");
    }
    if count >= n {
        return Ok((0..n).collect());
    }
    let mut chosen = vec![false; n];
    let mut out = Vec::with_capacity(count);
    let mut take = |v: usize, out: &mut Vec<usize>| {
        if !chosen[v] && out.len() < count {
            chosen[v] = true;
            out.push(v);
        }
    };

    let slow = slow_mode(g, 1000, seed)?;
    let mut by_slow: Vec<usize> = (0..n).collect();
    by_slow.sort_by(|&a, &b| slow[b].abs().total_cmp(&slow[a].abs()).then(a.cmp(&b)));
    for &v in by_slow.iter().take(count / 3) {
        take(v, &mut out);
    }

    let depth = hub_distance(g);
    let mut by_depth: Vec<usize> = (0..n).collect();
    by_depth.sort_by(|&a, &b| depth[b].cmp(&depth[a]).then(a.cmp(&b)));
    let quota = out.len() + count / 3;
    for &v in &by_depth {
        if out.len() >= quota {
            break;
        }
        take(v, &mut out);
    }

    let mut rng = seed.with_stream(seed.stream.wrapping_add(1)).rng();
    while out.len() < count {
        take(rng.gen_range(0..n), &mut out);
    }
    out.sort_unstable();
    Ok(out)
}

/// Approximate right eigenvector for the second eigenvalue of the lazy
/// kernel, by power iteration on its symmetrisation with the stationary
/// direction projected out.
fn slow_mode<G: Adjacency>(g: &G, iters: usize, seed: Seed) -> Result<Vec<f64>> {
    let n = g.order();
    let kernel = LazyKernel::new(g)?;
    let sqrt_deg: Vec<f64> = (0..n).map(|v| (g.degree(v) as f64).sqrt()).collect();
    let norm1 = sqrt_deg.iter().map(|x| x * x).sum::<f64>().sqrt();
    let psi1: Vec<f64> = sqrt_deg.iter().map(|x| x / norm1).collect();
    let mut rng = seed.rng();
    let mut x: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() - 0.5).collect();
    let mut mu = vec![0.0; n];
    let mut next = vec![0.0; n];
    let mut scratch = vec![0.0; n];
    for _ in 0..iters {
        let dot: f64 = x.iter().zip(&psi1).map(|(a, b)| a * b).sum();
        x.iter_mut().zip(&psi1).for_each(|(a, b)| *a -= dot * b);
        let norm = x.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm == 0.0 {
            break;
        }
        x.iter_mut().for_each(|a| *a /= norm);
        // S = D^{1/2} P D^{-1/2} is symmetric, so x S = (x D^{1/2}) P D^{-1/2}.
        for v in 0..n {
            mu[v] = x[v] * sqrt_deg[v];
        }
        kernel.step_into(&mu, &mut next, &mut scratch);
        for v in 0..n {
            x[v] = next[v] / sqrt_deg[v];
        }
    }
    Ok((0..n).map(|v| x[v] / sqrt_deg[v]).collect())
}

/// BFS distance to the nearest vertex of degree at least three (or of
/// maximum degree when no vertex has degree three).
fn hub_distance<G: Adjacency>(g: &G) -> Vec<usize> {
    let n = g.order();
    let maxd = (0..n).map(|v| g.degree(v)).max().unwrap_or(0);
    let hub = maxd.min(3);
    let mut dist = vec![usize::MAX; n];
    let mut queue = VecDeque::new();
    for v in 0..n {
        if g.degree(v) >= hub {
            dist[v] = 0;
            queue.push_back(v);
        }
    }
    while let Some(u) = queue.pop_front() {
        for &w in g.targets(u) {
            if dist[w as usize] == usize::MAX {
                dist[w as usize] = dist[u] + 1;
                queue.push_back(w as usize);
            }
        }
    }
    dist.iter_mut()
        .filter(|d| **d == usize::MAX)
        .for_each(|d| *d = 0);
    dist
}

/// `P[τ > t]` for `t = 0..=t_max`, alongside the absorbed mass.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurvivalCurve {
    pub survival: Vec<f64>,
    pub absorbed: Vec<f64>,
}

/// Exact survival curve of the hitting time of `target` from `mu0`: target
/// mass is removed before the first step and after every step.
pub fn hitting_survival<G: Adjacency>(
    g: &G,
    target: &VertexSet,
    mu0: &ProbDist,
    t_max: usize,
) -> Result<SurvivalCurve> {
    if target.is_empty() {
        return input("hitting target must be nonempty");
    }
    target.check_range(g.order())?;
    if mu0.len() != g.order() {
        return input("start distribution has the wrong length");
    }
    let kernel = LazyKernel::new(g)?;
    let mask = target.mask(g.order());
    Ok(absorbing_survival(&kernel, &mask, mu0.as_slice(), t_max))
}

pub(crate) fn absorbing_survival<G: Adjacency>(
    kernel: &LazyKernel<'_, G>,
    absorbing: &[bool],
    mu0: &[f64],
    t_max: usize,
) -> SurvivalCurve {
    let n = kernel.order();
    let mut mu = mu0.to_vec();
    let mut next = vec![0.0; n];
    let mut scratch = vec![0.0; n];
    let mut absorbed_total = 0.0;
    let mut survival = Vec::with_capacity(t_max + 1);
    let mut absorbed = Vec::with_capacity(t_max + 1);
    let kill = |mu: &mut [f64], absorbed_total: &mut f64| {
        for (m, &a) in mu.iter_mut().zip(absorbing) {
            if a {
                *absorbed_total += *m;
                *m = 0.0;
            }
        }
    };
    kill(&mut mu, &mut absorbed_total);
    survival.push(mu.iter().sum());
    absorbed.push(absorbed_total);
    for _ in 0..t_max {
        kernel.step_into(&mu, &mut next, &mut scratch);
        std::mem::swap(&mut mu, &mut next);
        kill(&mut mu, &mut absorbed_total);
        survival.push(mu.iter().sum());
        absorbed.push(absorbed_total);
    }
    SurvivalCurve { survival, absorbed }
}

/// One lazy-walk trajectory of length `steps + 1`.
pub fn simulate_walk<G: Adjacency>(
    g: &G,
    start: usize,
    steps: usize,
    seed: impl Into<Seed>,
) -> Result<Vec<usize>> {
    if start >= g.order() {
        return input(format!("start {start} outside 0..{}", g.order()));
    }
    if steps > 0 && g.degree(start) == 0 {
        return domain(format!("start vertex {start} is isolated"));
    }
    let mut rng = seed.into().rng();
    let mut path = Vec::with_capacity(steps + 1);
    let mut x = start;
    path.push(x);
    for _ in 0..steps {
        if rng.gen::<bool>() {
            let mut r = rng.gen_range(0..g.degree(x));
            match g.multiplicities(x) {
                None => x = g.targets(x)[r] as usize,
                Some(mult) => {
                    for (&y, &c) in g.targets(x).iter().zip(mult) {
                        if r < c as usize {
                            x = y as usize;
                            break;
                        }
                        r -= c as usize;
                    }
                }
            }
        }
        path.push(x);
    }
    Ok(path)
}

/// Largest `k` such that at least half of the vertices `v` have
/// `|B_k(v)| <= n/2`, where `B_k(v)` is the graph ball of radius `k`.
///
/// Every vertex gets one BFS that stops as soon as its ball exceeds `n/2`;
/// the answer is the `⌈n/2⌉`-th largest per-vertex radius. `dbar` is the
/// caller's average-degree bound and must be at least one.
pub fn ball_growth_lower_bound<G: Adjacency>(g: &G, dbar: f64) -> Result<usize> {
    if !(dbar >= 1.0) {
        return input("average-degree bound must be at least 1");
    }
    let n = g.order();
    if n == 0 {
        return Ok(0);
    }
    let half = n / 2;
    let radii: Vec<usize> = (0..n)
        .into_par_iter()
        .map_init(
            || (vec![u32::MAX; n], Vec::<u32>::new()),
            |(dist, touched), v| {
                let r = small_ball_radius(g, v, half, dist, touched);
                for &u in touched.iter() {
                    dist[u as usize] = u32::MAX;
                }
                touched.clear();
                r
            },
        )
        .collect();
    let mut sorted = radii;
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    let need = n.div_ceil(2);
    Ok(sorted[need - 1].min(n))
}

/// Largest radius whose ball around `v` has at most `half` vertices;
/// `usize::MAX` when the whole component of `v` is that small.
fn small_ball_radius<G: Adjacency>(
    g: &G,
    v: usize,
    half: usize,
    dist: &mut [u32],
    touched: &mut Vec<u32>,
) -> usize {
    if half == 0 {
        return 0;
    }
    dist[v] = 0;
    touched.push(v as u32);
    let mut head = 0;
    // ball size through radius r == number of touched vertices with dist <= r
    while head < touched.len() {
        let u = touched[head] as usize;
        head += 1;
        let du = dist[u];
        for &w in g.targets(u) {
            if dist[w as usize] == u32::MAX {
                dist[w as usize] = du + 1;
                touched.push(w);
                if touched.len() > half {
                    // the ball of radius du + 1 is too big
                    return du as usize;
                }
            }
        }
    }
    // the whole component fits: every radius works
    usize::MAX
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{complete_graph, cycle_graph, path_graph, star_graph};
    use crate::graph::fixtures::*;
    use crate::graph::Graph;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn stationary_examples() {
        assert!(close(
            stationary(&cycle(4)).unwrap().as_slice(),
            &[0.25; 4],
            1e-15
        ));
        assert!(close(
            stationary(&path(3)).unwrap().as_slice(),
            &[0.25, 0.5, 0.25],
            1e-15
        ));
        let k2 = path(2);
        let pi = stationary(&k2).unwrap();
        assert!(close(pi.as_slice(), &[0.5, 0.5], 1e-15));
        assert_eq!((pi.min(), pi.max()), (0.5, 0.5));
        let two = Graph::from_edges(4, [(0, 1), (2, 3)]).unwrap();
        assert!(matches!(stationary(&two), Err(crate::Error::Domain(_))));
    }

    #[test]
    fn step_examples() {
        let k2 = path(2);
        let kern = LazyKernel::new(&k2).unwrap();
        let d0 = ProbDist::delta(2, 0).unwrap();
        assert!(close(
            kern.step(&d0).unwrap().as_slice(),
            &[0.5, 0.5],
            1e-15
        ));
        let c4 = cycle(4);
        let kern = LazyKernel::new(&c4).unwrap();
        let d0 = ProbDist::delta(4, 0).unwrap();
        assert!(close(
            kern.step(&d0).unwrap().as_slice(),
            &[0.5, 0.25, 0.0, 0.25],
            1e-15
        ));
        let g = barbell(4);
        let pi = stationary(&g).unwrap();
        let kern = LazyKernel::new(&g).unwrap();
        assert!(close(
            kern.step(&pi).unwrap().as_slice(),
            pi.as_slice(),
            1e-12
        ));
        assert!(kern.step(&ProbDist::uniform(3)).is_err());
    }

    #[test]
    fn tv_examples() {
        let a = ProbDist::new(vec![0.2, 0.3, 0.5]).unwrap();
        assert_eq!(tv_distance(&a, &a).unwrap(), 0.0);
        let d0 = ProbDist::delta(2, 0).unwrap();
        let d1 = ProbDist::delta(2, 1).unwrap();
        assert_eq!(tv_distance(&d0, &d1).unwrap(), 1.0);
        assert_eq!(tv_distance(&d0, &ProbDist::uniform(2)).unwrap(), 0.5);
        assert!(tv_distance(&d0, &a).is_err());
        assert!(ProbDist::new(vec![0.5, 0.6]).is_err());
        assert!(ProbDist::new(vec![1.5, -0.5]).is_err());
    }

    /// Oracle: worst-start TV by evolving the full transition matrix power.
    fn dense_tmix(g: &Graph, eps: f64) -> usize {
        let n = g.order();
        let kern = LazyKernel::new(g).unwrap();
        let pi = stationary(g).unwrap();
        let p: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| kern.transition(i, j)).collect())
            .collect();
        let mut pt: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        for t in 0.. {
            let worst = pt
                .iter()
                .map(|row| tv_slices(row, pi.as_slice()))
                .fold(0.0, f64::max);
            if worst <= eps {
                return t;
            }
            pt = pt
                .iter()
                .map(|row| {
                    (0..n)
                        .map(|j| (0..n).map(|k| row[k] * p[k][j]).sum())
                        .collect()
                })
                .collect();
        }
        unreachable!()
    }

    #[test]
    fn mixing_time_examples() {
        let k2 = path(2);
        assert_eq!(mixing_time(&k2, 0.25, None).unwrap().t, Some(1));
        for n in 8..=12 {
            let kn = complete_graph(n);
            let t = mixing_time(&kn, 0.25, None).unwrap().t.unwrap();
            assert!(t <= 3);
            assert_eq!(t, dense_tmix(&kn, 0.25));
        }
        for n in [16usize, 32, 64] {
            let c = cycle_graph(n).unwrap();
            let r = mixing_time(&c, 0.25, Some(100_000)).unwrap();
            let ratio = r.t.unwrap() as f64 / (n * n) as f64;
            assert!((0.05..=5.0).contains(&ratio), "C_{n}: {ratio}");
            if n == 16 {
                assert_eq!(r.t.unwrap(), dense_tmix(&c, 0.25));
            }
        }
        let g = barbell(4);
        assert_eq!(
            mixing_time(&g, 0.25, None).unwrap().t.unwrap(),
            dense_tmix(&g, 0.25)
        );
    }

    #[test]
    fn mixing_time_reports_cap() {
        let c = cycle_graph(64).unwrap();
        let r = mixing_time(&c, 0.25, Some(10)).unwrap();
        assert_eq!(r.status, MixingStatus::Capped);
        assert_eq!(r.t, None);
        assert!(mixing_time(&c, 1.0, None).is_err());
        let two = Graph::from_edges(4, [(0, 1), (2, 3)]).unwrap();
        assert!(mixing_time(&two, 0.25, None).is_err());
    }

    #[test]
    fn avg_mixing_examples() {
        let seed = Seed::new(1);
        let k2 = path(2);
        assert_eq!(
            avg_mixing_time(&k2, 0.25, AvgMode::Exact, 0, seed, None)
                .unwrap()
                .t,
            Some(1)
        );
        // vertex-transitive: every start is equivalent
        for g in [cycle(10), complete_graph(7)] {
            let a = avg_mixing_time(&g, 0.25, AvgMode::Exact, 0, seed, Some(10_000)).unwrap();
            let w = mixing_time(&g, 0.25, Some(10_000)).unwrap();
            assert_eq!(a.t, w.t);
        }
        let star = star_graph(9);
        let a = avg_mixing_time(&star, 0.25, AvgMode::Exact, 0, seed, None).unwrap();
        let w = mixing_time(&star, 0.25, None).unwrap();
        assert!(a.t.unwrap() <= w.t.unwrap());
    }

    #[test]
    fn avg_curve_below_worst_curve() {
        let g = crate::generators::perturb(&path_graph(300), 1.0, 5).unwrap();
        let opts = MixingOptions {
            curve: true,
            ..Default::default()
        };
        let r = mixing_time_with(&g, &opts).unwrap();
        let c = r.curve.unwrap();
        assert_eq!(c.len(), r.t.unwrap() + 1);
        for t in 0..c.len() {
            assert!(c.mean_tv[t] <= c.max_tv[t] + 1e-15);
            if t > 0 {
                assert!(c.max_tv[t] <= c.max_tv[t - 1] + 1e-12);
            }
        }
        let a = avg_mixing_time_with(&g, &opts).unwrap();
        assert!(a.t.unwrap() <= r.t.unwrap());
        // mean crossing from the stored curve agrees
        let first = c.mean_tv.iter().position(|&x| x <= 0.25).unwrap();
        assert_eq!(Some(first), a.t);
    }

    #[test]
    fn sampled_average_over_all_starts_is_exact() {
        let g = barbell(5);
        let exact = avg_mixing_time(&g, 0.25, AvgMode::Exact, 0, Seed::new(0), None).unwrap();
        let sampled = avg_mixing_time(&g, 0.25, AvgMode::Sampled, 100, Seed::new(0), None).unwrap();
        assert_eq!(exact.t, sampled.t);
        assert!(sampled.rigorous);
    }

    #[test]
    fn candidates_find_the_worst_start_on_a_lollipop() {
        // K_8 with a 30-vertex tail: the tail tip is the worst start
        let mut e: Vec<(usize, usize)> = Vec::new();
        for u in 0..8 {
            for v in u + 1..8 {
                e.push((u, v));
            }
        }
        for i in 8..38 {
            e.push((i - 1, i));
        }
        let g = Graph::from_edges(38, e).unwrap();
        let c = candidate_starts(&g, 6, Seed::new(2)).unwrap();
        assert!(c.contains(&37));
        let opts = MixingOptions {
            starts: StartSelection::Candidates {
                count: 6,
                seed: Seed::new(2),
            },
            t_cap: Some(100_000),
            ..Default::default()
        };
        let cand = mixing_time_with(&g, &opts).unwrap();
        let exact = mixing_time(&g, 0.25, Some(100_000)).unwrap();
        assert_eq!(cand.t, exact.t);
        assert!(!cand.rigorous);
        assert_eq!(cand.mode, MixingMode::Candidates);
    }

    #[test]
    fn survival_examples() {
        let k2 = path(2);
        let s = hitting_survival(
            &k2,
            &VertexSet::new([0]),
            &ProbDist::delta(2, 1).unwrap(),
            60,
        )
        .unwrap();
        for (t, &x) in s.survival.iter().enumerate() {
            assert!((x - 0.5f64.powi(t as i32)).abs() < 1e-12);
        }
        let s = hitting_survival(
            &k2,
            &VertexSet::new([0]),
            &ProbDist::delta(2, 0).unwrap(),
            5,
        )
        .unwrap();
        assert_eq!(s.survival[0], 0.0);
        let g = barbell(4);
        let s = hitting_survival(&g, &VertexSet::new([6]), &ProbDist::uniform(8), 200).unwrap();
        for t in 0..s.survival.len() {
            assert!((s.survival[t] + s.absorbed[t] - 1.0).abs() < 1e-12);
            if t > 0 {
                assert!(s.survival[t] <= s.survival[t - 1]);
            }
        }
        assert!(hitting_survival(&g, &VertexSet::default(), &ProbDist::uniform(8), 3).is_err());
    }

    #[test]
    fn simulate_examples() {
        let k2 = path(2);
        assert_eq!(simulate_walk(&k2, 1, 0, 3).unwrap(), vec![1]);
        let walk = simulate_walk(&k2, 0, 100_000, 3).unwrap();
        let frac = walk.iter().filter(|&&v| v == 0).count() as f64 / walk.len() as f64;
        assert!((frac - 0.5).abs() < 0.01);
        // one-step frequencies on C4 from vertex 0
        let c4 = cycle(4);
        let walk = simulate_walk(&c4, 0, 200_000, 9).unwrap();
        let mut counts = [[0usize; 4]; 4];
        for w in walk.windows(2) {
            counts[w[0]][w[1]] += 1;
        }
        let want = [0.5, 0.25, 0.0, 0.25];
        for (x, row) in counts.iter().enumerate() {
            let total: usize = row.iter().sum();
            for (y, &c) in row.iter().enumerate() {
                let p = want[(y + 4 - x) % 4];
                let sigma = (p * (1.0 - p) / total as f64).sqrt();
                assert!((c as f64 / total as f64 - p).abs() <= 4.0 * sigma + 1e-12);
            }
        }
        let iso = Graph::from_edges(3, [(0, 1)]).unwrap();
        assert!(simulate_walk(&iso, 2, 5, 0).is_err());
    }

    #[test]
    fn simulate_respects_multiplicity() {
        let mg = crate::graph::MultiGraph::from_edges(3, [(0, 1), (0, 1), (0, 1), (0, 2)]).unwrap();
        let walk = simulate_walk(&mg, 0, 0, 0).unwrap();
        assert_eq!(walk, vec![0]);
        let mut to1 = 0;
        let mut moves = 0;
        for s in 0..4000u64 {
            let w = simulate_walk(&mg, 0, 1, s).unwrap();
            if w[1] != 0 {
                moves += 1;
                to1 += usize::from(w[1] == 1);
            }
        }
        let frac = to1 as f64 / moves as f64;
        let sigma = (0.75 * 0.25 / moves as f64).sqrt();
        assert!((frac - 0.75).abs() < 4.0 * sigma);
    }

    /// Oracle: per-vertex BFS ball sizes at every radius.
    fn ball_oracle(g: &Graph) -> usize {
        let n = g.order();
        let dist = |s: usize| {
            let mut d = vec![usize::MAX; n];
            d[s] = 0;
            let mut q = VecDeque::from([s]);
            while let Some(u) = q.pop_front() {
                for &w in g.targets(u) {
                    if d[w as usize] == usize::MAX {
                        d[w as usize] = d[u] + 1;
                        q.push_back(w as usize);
                    }
                }
            }
            d
        };
        let all: Vec<Vec<usize>> = (0..n).map(dist).collect();
        let mut best = 0;
        for k in 0..=n {
            let small = all
                .iter()
                .filter(|d| d.iter().filter(|&&x| x <= k).count() <= n / 2)
                .count();
            if 2 * small >= n {
                best = k;
            }
        }
        best
    }

    #[test]
    fn ball_growth_examples() {
        assert_eq!(ball_growth_lower_bound(&complete_graph(9), 8.0).unwrap(), 0);
        for n in [12usize, 20, 33, 64] {
            let c = cycle_graph(n).unwrap();
            let want = (n / 2 - 1) / 2;
            let got = ball_growth_lower_bound(&c, 2.0).unwrap();
            assert!(
                got == want || got == ball_oracle(&c),
                "C_{n}: {got} vs {want}"
            );
            assert_eq!(got, ball_oracle(&c));
            let p = path_graph(n);
            let gp = ball_growth_lower_bound(&p, 2.0).unwrap();
            assert!(gp.abs_diff(got) <= 1);
            assert_eq!(gp, ball_oracle(&p));
        }
        let g = crate::generators::perturb(&path_graph(200), 1.0, 1).unwrap();
        assert_eq!(ball_growth_lower_bound(&g, 3.0).unwrap(), ball_oracle(&g));
        assert!(ball_growth_lower_bound(&g, 0.5).is_err());
    }

    #[test]
    fn trajectories_match_exact_evolution() {
        let g = crate::generators::perturb(&path_graph(12), 2.0, 4).unwrap();
        let (g, _) = {
            let (c, _) = crate::graph::largest_component(&g);
            g.induced_subgraph(&c).unwrap()
        };
        let n = g.order();
        let kern = LazyKernel::new(&g).unwrap();
        let t = 7;
        let mut mu = ProbDist::delta(n, 0).unwrap();
        for _ in 0..t {
            mu = kern.step(&mu).unwrap();
        }
        let runs = 20_000;
        let mut counts = vec![0usize; n];
        for s in 0..runs {
            counts[simulate_walk(&g, 0, t, Seed::new(77).with_stream(s)).unwrap()[t]] += 1;
        }
        for v in 0..n {
            let p = mu[v];
            let sigma = (p * (1.0 - p) / runs as f64).sqrt();
            assert!((counts[v] as f64 / runs as f64 - p).abs() <= 4.0 * sigma + 1e-9);
        }
    }

    mod props {
        use super::*;
        use num_rational::Ratio;
        use proptest::prelude::*;

        fn connected_graph() -> impl Strategy<Value = Graph> {
            (3usize..14, any::<u64>(), 0.1f64..0.6).prop_filter_map("connected", |(n, s, p)| {
                let g = crate::generators::gen_gnp(n, p, s).unwrap();
                is_connected(&g).then_some(g)
            })
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(48))]

            #[test]
            fn kernel_rows_sum_to_one_and_are_reversible(g in connected_graph()) {
                let n = g.order();
                let kern = LazyKernel::new(&g).unwrap();
                let two_m = 2 * g.size() as i64;
                for i in 0..n {
                    let mut row = Ratio::from_integer(0i64);
                    for j in 0..n {
                        let (a, b) = kern.transition_exact(i, j);
                        let pij = Ratio::new(a as i64, b as i64);
                        row += pij;
                        let (c, d) = kern.transition_exact(j, i);
                        let pji = Ratio::new(c as i64, d as i64);
                        let pi_i = Ratio::new(g.degree(i) as i64, two_m);
                        let pi_j = Ratio::new(g.degree(j) as i64, two_m);
                        prop_assert_eq!(pi_i * pij, pi_j * pji);
                    }
                    prop_assert_eq!(row, Ratio::from_integer(1));
                }
            }

            #[test]
            fn tv_is_monotone_and_average_below_worst(g in connected_graph()) {
                let opts = MixingOptions { curve: true, t_cap: Some(5000), ..Default::default() };
                let w = mixing_time_with(&g, &opts).unwrap();
                let a = avg_mixing_time_with(&g, &opts).unwrap();
                prop_assert!(a.t.unwrap() <= w.t.unwrap());
                let c = w.curve.unwrap();
                for t in 1..c.len() {
                    prop_assert!(c.max_tv[t] <= c.max_tv[t - 1] + 1e-12);
                    prop_assert!(c.mean_tv[t] <= c.mean_tv[t - 1] + 1e-12);
                    prop_assert!(c.mean_tv[t] <= c.max_tv[t] + 1e-15);
                }
            }

            #[test]
            fn survival_conserves_mass(g in connected_graph(), u in 0usize..3) {
                let s = hitting_survival(&g, &VertexSet::new([u]), &ProbDist::uniform(g.order()), 100).unwrap();
                for t in 0..=100 {
                    prop_assert!((s.survival[t] + s.absorbed[t] - 1.0).abs() < 1e-12);
                }
            }
        }
    }
}
