//! Edge flow, conductance, the dyadic conductance profile over connected
//! sets, and the profile-sum mixing bound.

use std::cmp::Ordering;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::enumerate::{for_each_connected_set, grow_random, SetView};
use crate::error::{domain, input, Error, Result};
use crate::generators::Seed;
use crate::graph::{is_connected, set_stats, Adjacency, SetStats, VertexSet};

fn proper_stats<G: Adjacency>(g: &G, s: &VertexSet) -> Result<SetStats> {
    if s.is_empty() || s.len() >= g.order() {
        return input("set must be a nonempty proper subset of the vertices");
    }
    if g.size() == 0 {
        return domain("graph has no edges");
    }
    set_stats(g, s)
}

/// `Q(S) = |∂S| / 4e(G)`.
pub fn edge_flow<G: Adjacency>(g: &G, s: &VertexSet) -> Result<f64> {
    let st = proper_stats(g, s)?;
    Ok(st.boundary as f64 / (4 * g.size()) as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Conductance {
    /// `e(G)|∂S| / (deg S · deg(V∖S))`.
    pub phi: f64,
    /// `Q(S) / (π(S) π(V∖S))`, evaluated independently.
    pub phi_from_flow: f64,
    /// `|∂S| / 2deg S`.
    pub lower_bound: f64,
}

/// Both conductance formulas and the half-boundary-ratio lower bound.
pub fn conductance<G: Adjacency>(g: &G, s: &VertexSet) -> Result<Conductance> {
    let st = proper_stats(g, s)?;
    let m = g.size();
    let rest = 2 * m - st.degree;
    if st.degree == 0 || rest == 0 {
        return domain("set or its complement has zero degree");
    }
    let phi = (m as f64 * st.boundary as f64) / (st.degree as f64 * rest as f64);
    let q = st.boundary as f64 / (4 * m) as f64;
    let pi_s = st.degree as f64 / (2 * m) as f64;
    let pi_c = rest as f64 / (2 * m) as f64;
    let phi_from_flow = q / (pi_s * pi_c);
    let lower_bound = st.boundary as f64 / (2 * st.degree) as f64;
    assert!(
        (phi - phi_from_flow).abs() <= 1e-12 * phi.max(1.0),
        "conductance formulas disagree: {phi} vs {phi_from_flow}"
    );
    assert!(
        phi >= lower_bound * (1.0 - 1e-12),
        "conductance below half boundary ratio"
    );
    Ok(Conductance {
        phi,
        phi_from_flow,
        lower_bound,
    })
}

/// Conductance as the exact fraction `m·∂ / (deg S · deg(V∖S))`.
#[derive(Clone, Copy, Debug)]
struct Phi {
    num: u128,
    den: u128,
}

impl Phi {
    fn of(m: usize, boundary: usize, degree: usize) -> Phi {
        Phi {
            num: m as u128 * boundary as u128,
            den: degree as u128 * (2 * m - degree) as u128,
        }
    }

    fn value(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    fn cmp(self, other: Phi) -> Ordering {
        (self.num * other.den).cmp(&(other.num * self.den))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProfileMode {
    Exact,
    Sampled,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileLevel {
    pub j: u32,
    pub p: f64,
    /// Minimum conductance over qualifying connected sets, or 1 when none
    /// qualifies.
    pub phi: f64,
    pub witness: Option<VertexSet>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConductanceProfile {
    pub levels: Vec<ProfileLevel>,
    pub mode: ProfileMode,
}

impl ConductanceProfile {
    /// `Σ_j Φ(2^{-j})^{-2}`.
    pub fn fr_sum(&self) -> f64 {
        self.levels.iter().map(|l| l.phi.powi(-2)).sum()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileOptions {
    pub mode: ProfileMode,
    /// Random growths per level in sampled mode.
    pub budget: usize,
    pub seed: Seed,
    /// Exact mode is refused above this order.
    pub exact_limit: usize,
}

impl Default for ProfileOptions {
    fn default() -> Self {
        ProfileOptions {
            mode: ProfileMode::Exact,
            budget: 64,
            seed: Seed::new(0),
            exact_limit: 30,
        }
    }
}

/// Number of dyadic levels `⌈log₂(1/π_min)⌉`, computed exactly.
pub fn level_count<G: Adjacency>(g: &G) -> usize {
    let two_m = 2 * g.size() as u128;
    let dmin = (0..g.order()).map(|v| g.degree(v)).min().unwrap_or(0) as u128;
    if dmin == 0 {
        return 0;
    }
    let mut j = 0;
    while dmin << j < two_m {
        j += 1;
    }
    j
}

struct LevelMins {
    m: usize,
    levels: usize,
    best: Vec<Option<(Phi, VertexSet)>>,
}

impl LevelMins {
    fn new(m: usize, levels: usize) -> Self {
        LevelMins {
            m,
            levels,
            best: vec![None; levels],
        }
    }

    /// Levels `j` with `2^{-j-1} <= deg/2m <= 2^{-j}`.
    fn levels_of(&self, degree: usize) -> impl Iterator<Item = usize> {
        let two_m = 2 * self.m as u128;
        let d = degree as u128;
        let mut top = 0;
        while d << (top + 1) <= two_m {
            top += 1;
        }
        let exact = d << top == two_m;
        let lo = if exact && top > 0 { top - 1 } else { top };
        let levels = self.levels;
        (lo..=top).filter(move |&j| j >= 1 && j <= levels)
    }

    fn offer(&mut self, s: SetView<'_>, n: usize) {
        if s.len() >= n || s.degree == 0 {
            return;
        }
        let phi = Phi::of(self.m, s.boundary(), s.degree);
        for j in self.levels_of(s.degree).collect::<Vec<_>>() {
            let slot = &mut self.best[j - 1];
            if slot
                .as_ref()
                .map_or(true, |(b, _)| phi.cmp(*b) == Ordering::Less)
            {
                *slot = Some((phi, s.to_set()));
            }
        }
    }

    fn finish(self, mode: ProfileMode) -> ConductanceProfile {
        let levels = self
            .best
            .into_iter()
            .enumerate()
            .map(|(i, b)| {
                let j = i as u32 + 1;
                let (phi, witness) = match b {
                    Some((phi, w)) => (phi.value(), Some(w)),
                    None => (1.0, None),
                };
                ProfileLevel {
                    j,
                    p: 0.5f64.powi(j as i32),
                    phi,
                    witness,
                }
            })
            .collect();
        ConductanceProfile { levels, mode }
    }
}

/// `Φ(p)` for `p = 2^{-j}`, `j = 1..=⌈log₂(1/π_min)⌉`, minimised over
/// connected sets `S` with `p/2 <= π(S) <= p`.
///
/// Exact mode enumerates every connected set. Sampled mode examines all
/// singletons, all edges, and `budget` random connected growths per level
/// (every prefix of a growth is a candidate), so its values can only be
/// larger than the exact ones.
pub fn conductance_profile<G: Adjacency>(
    g: &G,
    opts: &ProfileOptions,
) -> Result<ConductanceProfile> {
    let n = g.order();
    if n < 2 || g.size() == 0 || !is_connected(g) {
        return domain("conductance profile needs a connected graph with an edge");
    }
    let m = g.size();
    let mut mins = LevelMins::new(m, level_count(g));
    match opts.mode {
        ProfileMode::Exact => {
            if n > opts.exact_limit {
                return Err(Error::Refused(format!(
                    "exact conductance profile on {n} > {} vertices",
                    opts.exact_limit
                )));
            }
            for_each_connected_set(g, 1, n - 1, |s| mins.offer(s, n))?;
        }
        ProfileMode::Sampled => {
            for v in 0..n {
                let members = [v as u32];
                mins.offer(
                    SetView {
                        members: &members,
                        internal: 0,
                        degree: g.degree(v),
                    },
                    n,
                );
            }
            for u in 0..n {
                for (v, c) in g.neighbors(u) {
                    if v > u {
                        let members = [u as u32, v as u32];
                        mins.offer(
                            SetView {
                                members: &members,
                                internal: c,
                                degree: g.degree(u) + g.degree(v),
                            },
                            n,
                        );
                    }
                }
            }
            let mut rng = opts.seed.rng();
            let two_m = 2 * m;
            for j in 1..=mins.levels {
                for _ in 0..opts.budget {
                    let root = rng.gen_range(0..n);
                    let mut buf = Vec::new();
                    let mut sets = Vec::new();
                    grow_random(g, root, &mut rng, |s| {
                        // collect prefixes; stop once π(S) exceeds 2^{-j}
                        if s.degree << j > two_m || s.len() >= n {
                            return false;
                        }
                        buf.clear();
                        buf.extend_from_slice(s.members);
                        sets.push((buf.clone(), s.internal, s.degree));
                        true
                    });
                    for (members, internal, degree) in sets {
                        mins.offer(
                            SetView {
                                members: &members,
                                internal,
                                degree,
                            },
                            n,
                        );
                    }
                }
            }
        }
    }
    Ok(mins.finish(opts.mode))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrReport {
    pub levels: Vec<ProfileLevel>,
    pub fr_sum: f64,
    pub bound: f64,
    /// False in sampled mode, where the bound is a heuristic estimate.
    pub rigorous: bool,
}

/// `C0 · Σ_j Φ(2^{-j})^{-2}` with the profile behind it.
pub fn fr_bound<G: Adjacency>(g: &G, c0: f64, opts: &ProfileOptions) -> Result<FrReport> {
    if !(c0 > 0.0) {
        return input("C0 must be positive");
    }
    let profile = conductance_profile(g, opts)?;
    let fr_sum = profile.fr_sum();
    Ok(FrReport {
        fr_sum,
        bound: c0 * fr_sum,
        rigorous: profile.mode == ProfileMode::Exact,
        levels: profile.levels,
    })
}
