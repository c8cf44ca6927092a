//! Thin, loaded and bad sets; spreader certification; the bad-vertex union.

use serde::{Deserialize, Serialize};

use crate::densest::densest_subgraph;
use crate::enumerate::for_each_connected_set;
use crate::error::{domain, input, Result};
use crate::graph::{induced_components, set_stats, Adjacency, VertexSet};

/// `(α, D)` together with the derived `β = 1/D²`, `γ = α²/4` and the size
/// window `[⌈(ln n)^{1/5}⌉, ⌊(1 − β)n⌋]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpreaderParams {
    pub alpha: f64,
    #[serde(rename = "D")]
    pub d: f64,
    pub beta: f64,
    pub gamma: f64,
    pub n: usize,
    pub k_lo: usize,
    pub k_hi: usize,
    /// `D >= 4` and `α < 1/D²`. Parameters outside this range are accepted
    /// for exploration but flagged.
    pub in_theorem_regime: bool,
}

impl SpreaderParams {
    pub fn new(alpha: f64, d: f64, n: usize) -> Result<SpreaderParams> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return input(format!("alpha = {alpha} must lie in (0, 1]"));
        }
        if !(d > 0.0 && d.is_finite()) {
            return input(format!("D = {d} must be positive"));
        }
        let beta = 1.0 / (d * d);
        let ln_n = (n.max(1) as f64).ln();
        let k_lo = (ln_n.powf(0.2).ceil() as usize).max(1);
        let k_hi = ((1.0 - beta) * n as f64).floor().max(0.0) as usize;
        Ok(SpreaderParams {
            alpha,
            d,
            beta,
            gamma: alpha * alpha / 4.0,
            n,
            k_lo,
            k_hi,
            in_theorem_regime: d >= 4.0 && alpha < beta,
        })
    }

    /// Replaces the size window.
    pub fn with_window(mut self, k_lo: usize, k_hi: usize) -> Result<SpreaderParams> {
        if k_lo == 0 || k_hi > self.n {
            return input(format!(
                "window [{k_lo}, {k_hi}] invalid for n = {}",
                self.n
            ));
        }
        self.k_lo = k_lo;
        self.k_hi = k_hi;
        Ok(self)
    }

    /// `n·e^{−√k}`.
    pub fn count_threshold(&self, k: usize) -> f64 {
        self.n as f64 * (-(k as f64).sqrt()).exp()
    }

    /// Smallest size covered by the large-loaded-set condition, `⌈αn⌉`.
    pub fn large_size(&self) -> usize {
        ((self.alpha * self.n as f64).ceil() as usize).max(1)
    }
}

fn thin(boundary: usize, size: usize, alpha: f64) -> bool {
    (boundary as f64) < alpha * size as f64
}

fn loaded(internal: usize, size: usize, d: f64) -> bool {
    internal as f64 > d * size as f64
}

fn bad(boundary: usize, degree: usize, gamma: f64) -> bool {
    (boundary as f64) < gamma * degree as f64
}

fn nonempty_stats<G: Adjacency>(g: &G, s: &VertexSet) -> Result<crate::graph::SetStats> {
    if s.is_empty() {
        return input("set must be nonempty");
    }
    set_stats(g, s)
}

/// `|∂S| < α|S|`.
pub fn is_thin<G: Adjacency>(g: &G, s: &VertexSet, alpha: f64) -> Result<bool> {
    let st = nonempty_stats(g, s)?;
    Ok(thin(st.boundary, st.size, alpha))
}

/// `e(S) > D|S|`.
pub fn is_loaded<G: Adjacency>(g: &G, s: &VertexSet, d: f64) -> Result<bool> {
    let st = nonempty_stats(g, s)?;
    Ok(loaded(st.internal, st.size, d))
}

/// `|∂S| / deg S < γ`.
pub fn is_bad<G: Adjacency>(g: &G, s: &VertexSet, gamma: f64) -> Result<bool> {
    let st = nonempty_stats(g, s)?;
    if st.degree == 0 {
        return domain("set has zero degree");
    }
    Ok(bad(st.boundary, st.degree, gamma))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BadBranch {
    Thin,
    Loaded,
    Both,
}

/// Outcome of checking that an `(α²/4)`-bad set has `|∂S| <= 2e(S)` and is
/// `α`-thin or `α⁻¹`-loaded.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BadSetCheck {
    /// Whether `S` is `(α²/4)`-bad at all; when false nothing is claimed.
    pub precondition: bool,
    pub boundary_at_most_twice_internal: bool,
    pub branch: Option<BadBranch>,
}

impl BadSetCheck {
    /// True when the precondition fails or both conclusions hold.
    pub fn holds(&self) -> bool {
        !self.precondition || (self.boundary_at_most_twice_internal && self.branch.is_some())
    }
}

pub fn bad_implies_thin_or_loaded<G: Adjacency>(
    g: &G,
    s: &VertexSet,
    alpha: f64,
) -> Result<BadSetCheck> {
    let st = nonempty_stats(g, s)?;
    if st.degree == 0 {
        return domain("set has zero degree");
    }
    let precondition = bad(st.boundary, st.degree, alpha * alpha / 4.0);
    let t = thin(st.boundary, st.size, alpha);
    let l = loaded(st.internal, st.size, 1.0 / alpha);
    Ok(BadSetCheck {
        precondition,
        boundary_at_most_twice_internal: st.boundary <= 2 * st.internal,
        branch: match (t, l) {
            (true, true) => Some(BadBranch::Both),
            (true, false) => Some(BadBranch::Thin),
            (false, true) => Some(BadBranch::Loaded),
            (false, false) => None,
        },
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
    /// Passed for every size up to `k_max_checked`, which is below the
    /// window top.
    Partial,
    /// A dense set exists but could not be certified at the required size.
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SizeCount {
    pub k: usize,
    pub count: u64,
    pub threshold: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub k: usize,
    pub count: u64,
    pub set: VertexSet,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountCondition {
    pub verdict: Verdict,
    pub k_max_checked: usize,
    pub per_k: Vec<SizeCount>,
    pub witnesses: Vec<Witness>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityCondition {
    pub verdict: Verdict,
    /// `⌈αn⌉`.
    pub min_size: usize,
    pub max_density: f64,
    /// A `D`-loaded set of size at least `⌈αn⌉` on failure, or the densest
    /// set when inconclusive.
    pub witness: Option<VertexSet>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpreaderCertificate {
    pub params: SpreaderParams,
    pub s1: CountCondition,
    pub s2: CountCondition,
    pub s3: DensityCondition,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BadSetStats {
    pub size: usize,
    pub degree: usize,
    pub pi: f64,
    /// `n·e^{−(ln n)^{1/11}}`, for comparison with `size`.
    pub size_threshold: f64,
    /// `e^{−(ln n)^{1/11}}`, for comparison with `pi`.
    pub pi_threshold: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BadSetReport {
    #[serde(rename = "U")]
    pub u: VertexSet,
    /// Connected components of `G[U]`, ordered by smallest vertex.
    pub blocks: Vec<VertexSet>,
    pub stats: BadSetStats,
    pub k_max_checked: usize,
    /// False when the enumeration stopped below the window top.
    pub complete: bool,
}

/// Default enumeration ceiling: the whole window up to 24 vertices, 6 beyond.
pub fn default_k_cap(n: usize) -> usize {
    if n <= 24 {
        n
    } else {
        6
    }
}

/// One enumeration pass over window-sized connected sets yielding the
/// certificate and the bad-vertex union together.
pub fn analyze<G: Adjacency>(
    g: &G,
    params: &SpreaderParams,
    k_cap: Option<usize>,
) -> Result<(SpreaderCertificate, BadSetReport)> {
    let n = g.order();
    if params.n != n {
        return input(format!(
            "parameters built for n = {}, graph has {n}",
            params.n
        ));
    }
    let cap = k_cap.unwrap_or_else(|| default_k_cap(n));
    let lo = params.k_lo;
    let top = params.k_hi.min(cap).min(n);
    let empty_window = lo > top;
    let mut thin_count = vec![0u64; top + 1];
    let mut loaded_count = vec![0u64; top + 1];
    let mut thin_first: Vec<Option<VertexSet>> = vec![None; top + 1];
    let mut loaded_first: Vec<Option<VertexSet>> = vec![None; top + 1];
    let mut in_u = vec![false; n];
    let inv_alpha = 1.0 / params.alpha;
    if !empty_window {
        for_each_connected_set(g, lo, top, |s| {
            let k = s.len();
            let b = s.boundary();
            let t = thin(b, k, params.alpha);
            let l = loaded(s.internal, k, inv_alpha);
            if t {
                thin_count[k] += 1;
                thin_first[k].get_or_insert_with(|| s.to_set());
            }
            if l {
                loaded_count[k] += 1;
                loaded_first[k].get_or_insert_with(|| s.to_set());
            }
            // every γ-bad set is thin or loaded
            if (t || l) && s.degree > 0 && bad(b, s.degree, params.gamma) {
                for &v in s.members {
                    in_u[v as usize] = true;
                }
            }
        })?;
    }
    let checked = if empty_window { params.k_hi } else { top };
    let complete = empty_window || top >= params.k_hi;
    let condition = |counts: &[u64], first: &mut [Option<VertexSet>]| {
        let mut per_k = Vec::new();
        let mut witnesses = Vec::new();
        if !empty_window {
            for k in lo..=top {
                let threshold = params.count_threshold(k);
                per_k.push(SizeCount {
                    k,
                    count: counts[k],
                    threshold,
                });
                if counts[k] as f64 >= threshold {
                    witnesses.push(Witness {
                        k,
                        count: counts[k],
                        set: first[k].take().expect("a counted set was recorded"),
                    });
                }
            }
        }
        let verdict = if !witnesses.is_empty() {
            Verdict::Fail
        } else if complete {
            Verdict::Pass
        } else {
            Verdict::Partial
        };
        CountCondition {
            verdict,
            k_max_checked: checked,
            per_k,
            witnesses,
        }
    };
    let s1 = condition(&thin_count, &mut thin_first);
    let s2 = condition(&loaded_count, &mut loaded_first);
    let s3 = large_loaded_check(g, params);

    let u: VertexSet = (0..n).filter(|&v| in_u[v]).collect();
    let blocks = induced_components(g, &u)?;
    let degree = crate::graph::degree_sum(g, &u)?;
    let ln_n = (n.max(1) as f64).ln();
    let decay = (-ln_n.powf(1.0 / 11.0)).exp();
    let report = BadSetReport {
        stats: BadSetStats {
            size: u.len(),
            degree,
            pi: if g.size() == 0 {
                0.0
            } else {
                degree as f64 / (2 * g.size()) as f64
            },
            size_threshold: n as f64 * decay,
            pi_threshold: decay,
        },
        u,
        blocks,
        k_max_checked: checked,
        complete,
    };
    Ok((
        SpreaderCertificate {
            params: params.clone(),
            s1,
            s2,
            s3,
        },
        report,
    ))
}

/// No set of at least `⌈αn⌉` vertices may be `D`-loaded. Certified through
/// the global densest subgraph: if its density is at most `D` nothing is
/// loaded; a loaded densest set that is too small is padded greedily.
fn large_loaded_check<G: Adjacency>(g: &G, params: &SpreaderParams) -> DensityCondition {
    let min_size = params.large_size();
    let Some(dense) = densest_subgraph(g) else {
        return DensityCondition {
            verdict: Verdict::Pass,
            min_size,
            max_density: 0.0,
            witness: None,
        };
    };
    let max_density = dense.density;
    if !dense.exceeds(params.d) {
        return DensityCondition {
            verdict: Verdict::Pass,
            min_size,
            max_density,
            witness: None,
        };
    }
    if dense.set.len() >= min_size {
        return DensityCondition {
            verdict: Verdict::Fail,
            min_size,
            max_density,
            witness: Some(dense.set),
        };
    }
    let padded = pad_greedily(g, &dense.set, min_size);
    let e = crate::graph::internal_edges(g, &padded).expect("in range");
    if loaded(e, padded.len(), params.d) {
        DensityCondition {
            verdict: Verdict::Fail,
            min_size,
            max_density,
            witness: Some(padded),
        }
    } else {
        DensityCondition {
            verdict: Verdict::Inconclusive,
            min_size,
            max_density,
            witness: Some(dense.set),
        }
    }
}

/// Grows `s` to `size` vertices, each time adding a vertex with the most
/// edges into the current set (smallest id on ties).
fn pad_greedily<G: Adjacency>(g: &G, s: &VertexSet, size: usize) -> VertexSet {
    let n = g.order();
    let mut inside = s.mask(n);
    let mut gain = vec![0usize; n];
    for v in s.iter() {
        for (u, c) in g.neighbors(v) {
            gain[u] += c;
        }
    }
    let mut members = s.to_vec();
    while members.len() < size.min(n) {
        let v = (0..n)
            .filter(|&v| !inside[v])
            .max_by(|&a, &b| gain[a].cmp(&gain[b]).then(b.cmp(&a)))
            .expect("fewer than n members");
        inside[v] = true;
        members.push(v);
        for (u, c) in g.neighbors(v) {
            gain[u] += c;
        }
    }
    VertexSet::new(members)
}

pub fn spreader_check<G: Adjacency>(
    g: &G,
    params: &SpreaderParams,
    k_cap: Option<usize>,
) -> Result<SpreaderCertificate> {
    Ok(analyze(g, params, k_cap)?.0)
}

pub fn bad_set_union<G: Adjacency>(
    g: &G,
    params: &SpreaderParams,
    k_cap: Option<usize>,
) -> Result<BadSetReport> {
    Ok(analyze(g, params, k_cap)?.1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::enumerate::enumerate_connected_sets;
    use crate::generators::{complete_graph, cycle_graph, gen_gnp, path_graph};
    use crate::graph::{connected_components, is_connected_set, Graph};
    use proptest::prelude::*;

    fn joined_cliques(k: usize) -> Graph {
        crate::graph::fixtures::barbell(k)
    }

    #[test]
    fn predicate_examples() {
        let c6 = cycle_graph(6).unwrap();
        let arc = VertexSet::new([0, 1, 2]);
        assert!(is_thin(&c6, &arc, 1.0).unwrap());
        assert!(!is_thin(&c6, &arc, 0.5).unwrap());
        assert!(is_thin(&c6, &VertexSet::full(6), 0.01).unwrap());
        let k4 = complete_graph(4);
        assert!(is_loaded(&k4, &VertexSet::full(4), 1.0).unwrap());
        assert!(!is_loaded(&k4, &VertexSet::full(4), 1.5).unwrap());
        let g = joined_cliques(4);
        let side = VertexSet::new(0..4);
        assert!(is_bad(&g, &side, 1.0 / 12.0).unwrap());
        assert!(!is_bad(&g, &side, 1.0 / 13.0).unwrap());
        assert!(!is_bad(&g, &VertexSet::new([2]), 1.0).unwrap());
        assert!(is_bad(&g, &VertexSet::full(8), 1e-9).unwrap());
        let iso = Graph::from_edges(3, [(0, 1)]).unwrap();
        assert!(is_bad(&iso, &VertexSet::new([2]), 0.5).is_err());
        assert!(is_thin(&iso, &VertexSet::default(), 0.5).is_err());
    }

    #[test]
    fn bad_set_branches() {
        let g = joined_cliques(4);
        let side = VertexSet::new(0..4);
        // γ = 0.09 > 1/13; ∂ = 1 < 0.6·4 so the thin branch holds, while
        // e = 6 does not exceed 4/0.6
        let c = bad_implies_thin_or_loaded(&g, &side, 0.6).unwrap();
        assert!(c.precondition && c.holds());
        assert_eq!(c.branch, Some(BadBranch::Thin));
        let c = bad_implies_thin_or_loaded(&g, &VertexSet::full(8), 0.3).unwrap();
        assert!(c.precondition && c.boundary_at_most_twice_internal && c.holds());
        let c = bad_implies_thin_or_loaded(&g, &VertexSet::new([0]), 0.5).unwrap();
        assert!(!c.precondition && c.holds());
    }

    #[test]
    fn params_window() {
        let p = SpreaderParams::new(0.01, 4.0, 1000).unwrap();
        assert_eq!(p.k_lo, 2);
        assert_eq!(p.k_hi, 937);
        assert_eq!(p.beta, 1.0 / 16.0);
        assert_eq!(p.gamma, 0.000025);
        assert!(p.in_theorem_regime);
        assert!(
            !SpreaderParams::new(0.05, 8.0, 10)
                .unwrap()
                .in_theorem_regime
        );
        assert!(SpreaderParams::new(0.0, 4.0, 10).is_err());
        assert!(SpreaderParams::new(0.1, -1.0, 10).is_err());
    }

    /// Oracle: per-size thin counts from brute-force connected sets.
    fn brute_thin(g: &Graph, alpha: f64, k: usize) -> u64 {
        crate::enumerate::tests_support::brute_connected(g, k, k)
            .iter()
            .filter(|s| is_thin(g, s, alpha).unwrap())
            .count() as u64
    }

    #[test]
    fn cycle_certificate() {
        let c8 = cycle_graph(8).unwrap();
        let p = SpreaderParams::new(0.05, 4.0, 8).unwrap();
        let cert = spreader_check(&c8, &p, None).unwrap();
        assert_eq!((p.k_lo, p.k_hi), (2, 7));
        assert_eq!(cert.s1.verdict, Verdict::Pass);
        for c in &cert.s1.per_k {
            assert_eq!(c.count, brute_thin(&c8, 0.05, c.k));
        }
        // with α = 1 arcs of length >= 3 are thin
        let p = SpreaderParams::new(1.0, 4.0, 8).unwrap();
        let cert = spreader_check(&c8, &p, None).unwrap();
        for c in &cert.s1.per_k {
            assert_eq!(c.count, brute_thin(&c8, 1.0, c.k));
        }
        assert_eq!(cert.s1.verdict, Verdict::Fail);
        assert!(cert
            .s1
            .witnesses
            .iter()
            .all(|w| is_thin(&c8, &w.set, 1.0).unwrap()));
    }

    #[test]
    fn complete_graph_fails_large_loaded() {
        let k16 = complete_graph(16);
        let p = SpreaderParams::new(0.01, 4.0, 16).unwrap();
        let cert = spreader_check(&k16, &p, Some(3)).unwrap();
        assert_eq!(cert.s3.verdict, Verdict::Fail);
        let w = cert.s3.witness.unwrap();
        assert_eq!(w.len(), 16);
        assert!(is_loaded(&k16, &w, 4.0).unwrap());
        assert_eq!(cert.s1.verdict, Verdict::Partial);
        assert_eq!(cert.s1.k_max_checked, 3);
    }

    #[test]
    fn small_dense_core_is_padded_or_inconclusive() {
        // K_12 hanging off a long path: dense core of 12 vertices, α·n = 30
        let mut e: Vec<(usize, usize)> = Vec::new();
        for u in 0..12 {
            for v in u + 1..12 {
                e.push((u, v));
            }
        }
        for i in 12..100 {
            e.push((i - 1, i));
        }
        let g = Graph::from_edges(100, e).unwrap();
        let p = SpreaderParams::new(0.3, 2.0, 100).unwrap();
        let cert = spreader_check(&g, &p, Some(2)).unwrap();
        // padding with 18 path vertices: 66 + 18 = 84 > 2·30
        assert_eq!(cert.s3.verdict, Verdict::Fail);
        let w = cert.s3.witness.unwrap();
        assert!(w.len() >= 30 && is_loaded(&g, &w, 2.0).unwrap());
        let p = SpreaderParams::new(0.3, 4.0, 100).unwrap();
        let cert = spreader_check(&g, &p, Some(2)).unwrap();
        assert_eq!(cert.s3.verdict, Verdict::Inconclusive);
        let p = SpreaderParams::new(0.3, 6.0, 100).unwrap();
        assert_eq!(
            spreader_check(&g, &p, Some(2)).unwrap().s3.verdict,
            Verdict::Pass
        );
    }

    #[test]
    fn trees_pass_loaded_conditions() {
        let g = path_graph(20);
        let p = SpreaderParams::new(0.05, 4.0, 20).unwrap();
        let cert = spreader_check(&g, &p, None).unwrap();
        assert_eq!(cert.s2.verdict, Verdict::Pass);
        assert!(cert.s2.per_k.iter().all(|c| c.count == 0));
        assert_eq!(cert.s3.verdict, Verdict::Pass);
    }

    #[test]
    fn bad_union_examples() {
        for n in 4..=12 {
            let g = complete_graph(n);
            let p = SpreaderParams::new(0.05, 4.0, n).unwrap();
            let r = bad_set_union(&g, &p, None).unwrap();
            assert!(r.u.is_empty());
            assert_eq!(r.stats.pi, 0.0);
        }
        let g = joined_cliques(5);
        let p = SpreaderParams::new(0.5, 4.0, 10).unwrap();
        assert!(p.gamma > 1.0 / 21.0 && p.k_lo <= 5 && p.k_hi >= 5);
        let r = bad_set_union(&g, &p, None).unwrap();
        assert!(r.u.len() == 10);
        assert_eq!(r.blocks, vec![VertexSet::full(10)]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn bad_sets_are_thin_or_loaded(n in 2usize..=8, p in 0.2f64..0.9, seed in any::<u64>()) {
            let g = gen_gnp(n, p, seed).unwrap();
            for s in enumerate_connected_sets(&g, 1, n).unwrap() {
                if crate::graph::degree_sum(&g, &s).unwrap() == 0 {
                    continue;
                }
                for alpha in [0.1, 0.5, 1.0] {
                    prop_assert!(bad_implies_thin_or_loaded(&g, &s, alpha).unwrap().holds());
                }
            }
        }

        #[test]
        fn union_matches_oracle_and_grows_with_cap(n in 6usize..=14, p in 0.15f64..0.6, seed in any::<u64>(), alpha in 0.2f64..1.0) {
            let g = gen_gnp(n, p, seed).unwrap();
            let params = SpreaderParams::new(alpha, 4.0, n).unwrap();
            let mut prev = VertexSet::default();
            for cap in 1..=n {
                let r = bad_set_union(&g, &params, Some(cap)).unwrap();
                prop_assert!(prev.iter().all(|v| r.u.contains(v)));
                for b in &r.blocks {
                    prop_assert!(is_connected_set(&g, b).unwrap());
                }
                let joined: VertexSet = r.blocks.iter().flat_map(|b| b.to_vec()).collect();
                prop_assert_eq!(&joined, &r.u);
                prev = r.u;
            }
            // oracle: union of every bad connected set in the window
            let mut want = vec![false; n];
            if params.k_lo <= params.k_hi {
                for s in enumerate_connected_sets(&g, params.k_lo, params.k_hi).unwrap() {
                    if crate::graph::degree_sum(&g, &s).unwrap() > 0 && is_bad(&g, &s, params.gamma).unwrap() {
                        s.iter().for_each(|v| want[v] = true);
                    }
                }
            }
            let want: VertexSet = (0..n).filter(|&v| want[v]).collect();
            prop_assert_eq!(prev, want);
            let blocks = connected_components(&g);
            prop_assert!(!blocks.is_empty());
        }
    }
}
