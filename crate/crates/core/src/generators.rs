//! Seeded constructions of the random graph models and host diagnostics.
//!
//! All randomness flows from a [`Seed`] through ChaCha8 with an explicit
//! stream index, so identical `(master, stream)` pairs give identical edge
//! lists on every platform.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};
use crate::graph::{Adjacency, Graph};

/// Master seed plus substream index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Seed {
    pub master: u64,
    pub stream: u64,
}

impl Seed {
    pub fn new(master: u64) -> Seed {
        Seed { master, stream: 0 }
    }

    pub fn with_stream(self, stream: u64) -> Seed {
        Seed { stream, ..self }
    }

    pub fn rng(self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master);
        rng.set_stream(self.stream);
        rng
    }
}

impl From<u64> for Seed {
    fn from(master: u64) -> Self {
        Seed::new(master)
    }
}

fn check_probability(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return input(format!("probability {p} outside [0, 1]"));
    }
    Ok(())
}

/// Geometric gap sampler: number of failures before the next success of a
/// Bernoulli(p) sequence, drawn with one uniform.
struct Gaps {
    log_q: f64,
    certain: bool,
}

impl Gaps {
    fn new(p: f64) -> Gaps {
        Gaps {
            log_q: (1.0 - p).ln(),
            certain: p >= 1.0,
        }
    }

    fn next(&self, rng: &mut ChaCha8Rng) -> u64 {
        if self.certain {
            return 0;
        }
        let r: f64 = rng.gen();
        let g = ((1.0 - r).ln() / self.log_q).floor();
        if g.is_finite() && g < 1e18 {
            g as u64
        } else {
            u64::MAX
        }
    }
}

/// Walks the pairs `(u, v)`, `u < v`, in lexicographic order and reports
/// each pair independently with probability `p`, using geometric skips.
fn sample_pairs(n: usize, p: f64, rng: &mut ChaCha8Rng, mut hit: impl FnMut(usize, usize)) {
    if n < 2 || p <= 0.0 {
        return;
    }
    let gaps = Gaps::new(p);
    let (mut u, mut v) = (0usize, 1usize);
    // advance the cursor by `s` pair positions; false once past the end
    let advance = |u: &mut usize, v: &mut usize, mut s: u64| -> bool {
        loop {
            let left = (n - *v) as u64;
            if s < left {
                *v += s as usize;
                return true;
            }
            s -= left;
            *u += 1;
            *v = *u + 1;
            if *v >= n {
                return false;
            }
        }
    };
    loop {
        if !advance(&mut u, &mut v, gaps.next(rng)) {
            return;
        }
        hit(u, v);
        if !advance(&mut u, &mut v, 1) {
            return;
        }
    }
}

/// Binomial random graph `G(n, p)`.
pub fn gen_gnp(n: usize, p: f64, seed: impl Into<Seed>) -> Result<Graph> {
    check_probability(p)?;
    let mut rng = seed.into().rng();
    let mut edges = Vec::new();
    sample_pairs(n, p, &mut rng, |u, v| edges.push((u, v)));
    Graph::from_edges(n, edges)
}

/// `G ∪ R` with `R ~ G(n, eps/n)` drawn from `seed`.
pub fn perturb(g: &Graph, eps: f64, seed: impl Into<Seed>) -> Result<Graph> {
    if !(eps > 0.0 && eps.is_finite()) {
        return input(format!("perturbation strength {eps} must be positive"));
    }
    let n = g.order();
    let r = gen_gnp(n, (eps / n as f64).min(1.0), seed)?;
    g.union(&r)
}

/// Newman–Watts small world: the circulant band with offsets `1..=k`, plus
/// every non-band pair independently with probability `eps/n`.
pub fn gen_newman_watts(n: usize, k: usize, eps: f64, seed: impl Into<Seed>) -> Result<Graph> {
    if k == 0 || 2 * k >= n {
        return input(format!(
            "band width k = {k} must satisfy 1 <= k < n/2 (n = {n})"
        ));
    }
    if !(eps >= 0.0 && eps.is_finite()) {
        return input(format!("eps = {eps} must be non-negative"));
    }
    let p = eps / n as f64;
    check_probability(p)?;
    let mut edges: Vec<(usize, usize)> = circulant_edges(n, &(1..=k).collect::<Vec<_>>());
    let mut rng = seed.into().rng();
    sample_pairs(n, p, &mut rng, |u, v| {
        let d = v - u;
        if d > k && n - d > k {
            edges.push((u, v));
        }
    });
    Graph::from_edges(n, edges)
}

/// Keeps each edge of `g` independently with probability `p`.
///
/// Edges are visited in lexicographic order with the same gap sampler as
/// [`gen_gnp`], so percolating `K_n` reproduces `gen_gnp(n, p, seed)`.
pub fn percolate(g: &Graph, p: f64, seed: impl Into<Seed>) -> Result<Graph> {
    check_probability(p)?;
    let edges = g.edges();
    let mut kept = Vec::new();
    if p > 0.0 {
        let gaps = Gaps::new(p);
        let mut rng = seed.into().rng();
        let mut idx: u64 = 0;
        loop {
            idx = idx.saturating_add(gaps.next(&mut rng));
            if idx >= edges.len() as u64 {
                break;
            }
            kept.push(edges[idx as usize]);
            idx += 1;
        }
    }
    Graph::from_edges(g.order(), kept)
}

pub fn path_graph(n: usize) -> Graph {
    Graph::from_edges(n, (1..n).map(|i| (i - 1, i))).expect("path edges are valid")
}

pub fn cycle_graph(n: usize) -> Result<Graph> {
    if n < 3 {
        return input("a cycle needs at least 3 vertices");
    }
    Graph::from_edges(n, (0..n).map(|i| (i, (i + 1) % n)))
}

pub fn complete_graph(n: usize) -> Graph {
    Graph::from_edges(n, (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))))
        .expect("complete graph edges are valid")
}

/// Star `K_{1,leaves}` with centre 0.
pub fn star_graph(leaves: usize) -> Graph {
    Graph::from_edges(leaves + 1, (1..=leaves).map(|v| (0, v))).expect("star edges are valid")
}

fn circulant_edges(n: usize, offsets: &[usize]) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    for i in 0..n {
        for &o in offsets {
            let j = (i + o) % n;
            edges.push((i.min(j), i.max(j)));
        }
    }
    edges.sort_unstable();
    edges.dedup();
    edges
}

/// Circulant graph: `i ~ i + o (mod n)` for each offset `o`.
pub fn circulant(n: usize, offsets: &[usize]) -> Result<Graph> {
    if offsets.iter().any(|&o| o == 0 || o % n == 0) {
        return input("circulant offsets must be non-zero modulo n");
    }
    Graph::from_edges(n, circulant_edges(n, offsets))
}

const REGULAR_ATTEMPTS: u64 = 100_000;

/// Uniform random `d`-regular graph via the configuration model, rejecting
/// pairings with loops or parallel edges and retrying on the next substream.
pub fn random_regular(n: usize, d: usize, seed: impl Into<Seed>) -> Result<Graph> {
    if d >= n || (n * d) % 2 == 1 {
        return input(format!("no simple {d}-regular graph on {n} vertices"));
    }
    let seed = seed.into();
    let mut points: Vec<u32> = Vec::with_capacity(n * d);
    let mut adj: Vec<Vec<u32>> = vec![Vec::with_capacity(d); n];
    'attempt: for attempt in 0..REGULAR_ATTEMPTS {
        let mut rng = seed.with_stream(seed.stream.wrapping_add(attempt)).rng();
        points.clear();
        points.extend((0..n as u32).flat_map(|v| std::iter::repeat(v).take(d)));
        points.shuffle(&mut rng);
        adj.iter_mut().for_each(Vec::clear);
        for pair in points.chunks_exact(2) {
            let (u, v) = (pair[0], pair[1]);
            if u == v || adj[u as usize].contains(&v) {
                continue 'attempt;
            }
            adj[u as usize].push(v);
            adj[v as usize].push(u);
        }
        let edges = points
            .chunks_exact(2)
            .map(|p| (p[0] as usize, p[1] as usize));
        return Graph::from_edges(n, edges);
    }
    Err(Error::Cap {
        what: "configuration-model rejection sampling",
        cap: REGULAR_ATTEMPTS as usize,
    })
}

/// Host graph for percolation experiments.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum HostSpec {
    Complete { n: usize },
    Circulant { n: usize, offsets: Vec<usize> },
    RandomRegular { n: usize, d: usize },
    File(PathBuf),
}

impl HostSpec {
    pub fn build(&self, seed: impl Into<Seed>) -> Result<Graph> {
        match self {
            HostSpec::Complete { n } => Ok(complete_graph(*n)),
            HostSpec::Circulant { n, offsets } => circulant(*n, offsets),
            HostSpec::RandomRegular { n, d } => random_regular(*n, *d, seed),
            HostSpec::File(p) => crate::io::read_graph(p),
        }
    }

    /// Degree of the host when it is regular by construction.
    pub fn regular_degree(&self) -> Option<usize> {
        match self {
            HostSpec::Complete { n } => Some(n.saturating_sub(1)),
            HostSpec::Circulant { n, offsets } => {
                Some(circulant_edges(*n, offsets).len() * 2 / n.max(&1))
            }
            HostSpec::RandomRegular { d, .. } => Some(*d),
            HostSpec::File(_) => None,
        }
    }
}

/// Percolates a host without materialising it when the host is complete.
pub fn percolate_host(host: &HostSpec, p: f64, host_seed: Seed, seed: Seed) -> Result<Graph> {
    match host {
        HostSpec::Complete { n } => gen_gnp(*n, p, seed),
        _ => percolate(&host.build(host_seed)?, p, seed),
    }
}

impl FromStr for HostSpec {
    type Err = Error;

    /// `complete:n=100`, `circulant:n=100,offsets=1;2;3`,
    /// `random-regular:n=100,d=6`, `file:<path>`.
    fn from_str(s: &str) -> Result<Self> {
        let (kind, rest) = s
            .split_once(':')
            .ok_or_else(|| Error::Input(format!("host spec {s:?} lacks a kind prefix")))?;
        if kind == "file" {
            return Ok(HostSpec::File(PathBuf::from(rest)));
        }
        let mut n = None;
        let mut d = None;
        let mut offsets = None;
        for kv in rest.split(',').filter(|kv| !kv.is_empty()) {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Input(format!("expected key=value, got {kv:?}")))?;
            let num = |x: &str| {
                x.trim()
                    .parse::<usize>()
                    .map_err(|e| Error::Input(format!("{k}: {e}")))
            };
            match k.trim() {
                "n" => n = Some(num(v)?),
                "d" => d = Some(num(v)?),
                "offsets" => offsets = Some(v.split(';').map(num).collect::<Result<Vec<_>>>()?),
                other => return input(format!("unknown host key {other:?}")),
            }
        }
        let n = n.ok_or_else(|| Error::Input("host spec needs n=".into()))?;
        match kind {
            "complete" => Ok(HostSpec::Complete { n }),
            "circulant" => Ok(HostSpec::Circulant {
                n,
                offsets: offsets.ok_or_else(|| Error::Input("circulant needs offsets=".into()))?,
            }),
            "random-regular" => Ok(HostSpec::RandomRegular {
                n,
                d: d.ok_or_else(|| Error::Input("random-regular needs d=".into()))?,
            }),
            other => input(format!("unknown host kind {other:?}")),
        }
    }
}

impl fmt::Display for HostSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HostSpec::Complete { n } => write!(f, "complete:n={n}"),
            HostSpec::Circulant { n, offsets } => {
                let o: Vec<String> = offsets.iter().map(|o| o.to_string()).collect();
                write!(f, "circulant:n={n},offsets={}", o.join(";"))
            }
            HostSpec::RandomRegular { n, d } => write!(f, "random-regular:n={n},d={d}"),
            HostSpec::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

/// Degeneracy with a witness ordering in which every vertex has at most
/// `value` neighbours before it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Degeneracy {
    pub value: usize,
    pub ordering: Vec<usize>,
}

/// Minimum-degree peeling with bucket queues, O(n + m).
pub fn degeneracy<G: Adjacency>(g: &G) -> Degeneracy {
    let n = g.order();
    let mut deg: Vec<usize> = (0..n).map(|v| g.degree(v)).collect();
    let maxd = deg.iter().copied().max().unwrap_or(0);
    // bucket sort vertices by degree
    let mut bin = vec![0usize; maxd + 2];
    for &d in &deg {
        bin[d] += 1;
    }
    let mut start = 0;
    for b in bin.iter_mut() {
        let c = *b;
        *b = start;
        start += c;
    }
    let mut vert = vec![0usize; n];
    let mut pos = vec![0usize; n];
    for v in 0..n {
        pos[v] = bin[deg[v]];
        vert[pos[v]] = v;
        bin[deg[v]] += 1;
    }
    for d in (1..=maxd + 1).rev() {
        bin[d] = bin[d - 1];
    }
    bin[0] = 0;
    let mut value = 0;
    for i in 0..n {
        let v = vert[i];
        value = value.max(deg[v]);
        for (u, c) in g.neighbors(v) {
            for _ in 0..c {
                if deg[u] > deg[v] {
                    let du = deg[u];
                    let pu = pos[u];
                    let pw = bin[du];
                    let w = vert[pw];
                    if u != w {
                        vert.swap(pu, pw);
                        pos[u] = pw;
                        pos[w] = pu;
                    }
                    bin[du] += 1;
                    deg[u] -= 1;
                }
            }
        }
    }
    vert.reverse();
    Degeneracy {
        value,
        ordering: vert,
    }
}

/// `max{|λ_2|, |λ_n|}` of the adjacency operator of a regular graph.
///
/// Power iteration on the orthogonal complement of the all-ones vector: the
/// dominant eigenvalue magnitude there is exactly `max{|λ_2|, |λ_n|}`. The
/// estimate `‖Ax‖` over unit `x` increases monotonically; iteration stops
/// when an Aitken-style tail estimate of the remaining gain drops below
/// `tol`.
pub fn second_eigenvalue<G: Adjacency>(g: &G, tol: f64) -> Result<f64> {
    let n = g.order();
    if n == 0 {
        return input("empty graph");
    }
    let d = g.degree(0);
    if (0..n).any(|v| g.degree(v) != d) {
        return input("second_eigenvalue requires a regular graph");
    }
    if !(tol > 0.0) {
        return input("tolerance must be positive");
    }
    if n == 1 {
        return Ok(0.0);
    }
    let cap = ((10.0 * (n as f64).ln() / tol).ceil() as usize).max(100);
    let mut rng = Seed::new(0x5eed_1a2b).rng();
    let mut x: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() - 0.5).collect();
    let project = |x: &mut [f64]| {
        let mean = x.iter().sum::<f64>() / n as f64;
        x.iter_mut().for_each(|v| *v -= mean);
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        norm
    };
    let norm = project(&mut x);
    x.iter_mut().for_each(|v| *v /= norm);
    let mut y = vec![0.0; n];
    let mut prev = 0.0;
    let mut prev_gain = f64::INFINITY;
    for it in 0..cap {
        for (v, yv) in y.iter_mut().enumerate() {
            *yv = g.neighbors(v).map(|(u, c)| c as f64 * x[u]).sum();
        }
        let rho = project(&mut y);
        if rho == 0.0 {
            return Ok(0.0);
        }
        for (xv, yv) in x.iter_mut().zip(&y) {
            *xv = yv / rho;
        }
        let gain = (rho - prev).abs();
        if it > 2 {
            let q = (gain / prev_gain).min(0.999_999);
            let tail = if gain == 0.0 {
                0.0
            } else {
                gain * q / (1.0 - q)
            };
            if gain < tol && tail < tol {
                return Ok(rho);
            }
        }
        prev = rho;
        prev_gain = gain;
    }
    Err(Error::Cap {
        what: "second eigenvalue power iteration",
        cap,
    })
}
