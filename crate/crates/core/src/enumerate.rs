//! Connected vertex sets: exhaustive enumeration and randomized growth.
//!
//! Enumeration extends a set only by vertices larger than its root and, at
//! each step, only by neighbours of the newly added vertex that were not
//! already adjacent to the set. Every connected set is produced exactly once,
//! from its smallest vertex, with no duplicate filtering.

use rand::Rng;

use crate::error::{domain, input, Result};
use crate::generators::Seed;
use crate::graph::{connected_components, Adjacency, VertexSet};

/// A connected set as seen by an enumeration visitor. `members` is in
/// discovery order, not sorted.
#[derive(Clone, Copy, Debug)]
pub struct SetView<'s> {
    pub members: &'s [u32],
    /// `e_G(S)`, with multiplicity.
    pub internal: usize,
    /// `deg_G(S)`.
    pub degree: usize,
}

impl SetView<'_> {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn boundary(&self) -> usize {
        self.degree - 2 * self.internal
    }

    pub fn to_set(&self) -> VertexSet {
        self.members.iter().map(|&v| v as usize).collect()
    }
}

struct Esu<'g, G, F> {
    g: &'g G,
    k_min: usize,
    k_max: usize,
    root: u32,
    in_set: Vec<bool>,
    cover: Vec<u32>,
    members: Vec<u32>,
    pool: Vec<Vec<u32>>,
    visit: F,
}

impl<G: Adjacency, F: FnMut(SetView<'_>)> Esu<'_, G, F> {
    fn push(&mut self, w: u32) -> usize {
        let w_ = w as usize;
        let mut gained = 0;
        self.cover[w_] += 1;
        for (u, c) in self.g.neighbors(w_) {
            self.cover[u] += 1;
            if self.in_set[u] {
                gained += c;
            }
        }
        self.in_set[w_] = true;
        self.members.push(w);
        gained
    }

    fn pop(&mut self) {
        let w = self.members.pop().unwrap() as usize;
        self.in_set[w] = false;
        self.cover[w] -= 1;
        for &u in self.g.targets(w) {
            self.cover[u as usize] -= 1;
        }
    }

    fn extend(&mut self, mut ext: Vec<u32>, internal: usize, degree: usize) {
        let k = self.members.len();
        if k >= self.k_min {
            (self.visit)(SetView {
                members: &self.members,
                internal,
                degree,
            });
        }
        if k < self.k_max {
            while let Some(w) = ext.pop() {
                let mut next = self.pool.pop().unwrap_or_default();
                next.clear();
                next.extend_from_slice(&ext);
                for &u in self.g.targets(w as usize) {
                    if u > self.root && self.cover[u as usize] == 0 {
                        next.push(u);
                    }
                }
                let gained = self.push(w);
                self.extend(next, internal + gained, degree + self.g.degree(w as usize));
                self.pop();
            }
        }
        self.pool.push(ext);
    }
}

/// Calls `visit` once for every connected set `S` with
/// `k_min <= |S| <= k_max`. The number of such sets can be exponential in
/// `k_max`.
pub fn for_each_connected_set<G, F>(g: &G, k_min: usize, k_max: usize, visit: F) -> Result<()>
where
    G: Adjacency,
    F: FnMut(SetView<'_>),
{
    let n = g.order();
    if k_min < 1 || k_min > k_max || k_max > n {
        return input(format!(
            "size range {k_min}..={k_max} invalid for a graph on {n} vertices"
        ));
    }
    let mut esu = Esu {
        g,
        k_min,
        k_max,
        root: 0,
        in_set: vec![false; n],
        cover: vec![0; n],
        members: Vec::with_capacity(k_max),
        pool: Vec::new(),
        visit,
    };
    for r in 0..n {
        esu.root = r as u32;
        let mut ext = esu.pool.pop().unwrap_or_default();
        ext.clear();
        ext.extend(g.targets(r).iter().copied().filter(|&u| u > r as u32));
        esu.push(r as u32);
        esu.extend(ext, 0, g.degree(r));
        esu.pop();
    }
    Ok(())
}

/// All connected sets with size in `k_min..=k_max`, in enumeration order.
pub fn enumerate_connected_sets<G: Adjacency>(
    g: &G,
    k_min: usize,
    k_max: usize,
) -> Result<Vec<VertexSet>> {
    let mut out = Vec::new();
    for_each_connected_set(g, k_min, k_max, |s| out.push(s.to_set()))?;
    Ok(out)
}

/// Number of connected sets of each size `0..=k_max` (index = size).
pub fn count_connected_sets<G: Adjacency>(g: &G, k_max: usize) -> Result<Vec<u64>> {
    let mut counts = vec![0u64; k_max + 1];
    for_each_connected_set(g, 1, k_max, |s| counts[s.len()] += 1)?;
    Ok(counts)
}

/// Grows a connected set from `root` by repeatedly adding a uniformly chosen
/// frontier vertex, calling `visit` on every prefix (including `{root}`)
/// until `visit` returns `false` or the component is exhausted.
pub(crate) fn grow_random<G, R, F>(g: &G, root: usize, rng: &mut R, mut visit: F)
where
    G: Adjacency,
    R: Rng,
    F: FnMut(SetView<'_>) -> bool,
{
    let n = g.order();
    let mut in_set = vec![false; n];
    let mut in_frontier = vec![false; n];
    let mut frontier: Vec<u32> = Vec::new();
    let mut members: Vec<u32> = Vec::new();
    let mut internal = 0;
    let mut degree = 0;
    let mut add = |v: usize,
                   members: &mut Vec<u32>,
                   frontier: &mut Vec<u32>,
                   internal: &mut usize,
                   degree: &mut usize| {
        in_set[v] = true;
        members.push(v as u32);
        *degree += g.degree(v);
        for (u, c) in g.neighbors(v) {
            if in_set[u] {
                *internal += c;
            } else if !in_frontier[u] {
                in_frontier[u] = true;
                frontier.push(u as u32);
            }
        }
    };
    add(
        root,
        &mut members,
        &mut frontier,
        &mut internal,
        &mut degree,
    );
    loop {
        let more = visit(SetView {
            members: &members,
            internal,
            degree,
        });
        if !more || frontier.is_empty() {
            return;
        }
        let i = rng.gen_range(0..frontier.len());
        let v = frontier.swap_remove(i) as usize;
        add(v, &mut members, &mut frontier, &mut internal, &mut degree);
    }
}

/// `count` connected sets of size exactly `k`, each grown from a uniform root
/// (restricted to components with at least `k` vertices) by random frontier
/// expansion. The distribution is not uniform over connected sets.
pub fn sample_connected_sets<G: Adjacency>(
    g: &G,
    k: usize,
    count: usize,
    seed: impl Into<Seed>,
) -> Result<Vec<VertexSet>> {
    let n = g.order();
    if k < 1 || k > n {
        return input(format!("set size {k} outside 1..={n}"));
    }
    let roots: Vec<usize> = connected_components(g)
        .into_iter()
        .filter(|c| c.len() >= k)
        .flat_map(|c| c.to_vec())
        .collect();
    if roots.is_empty() {
        return domain(format!(
            "no connected set of size {k}: every component is smaller"
        ));
    }
    let mut rng = seed.into().rng();
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let root = roots[rng.gen_range(0..roots.len())];
        let mut set = None;
        grow_random(g, root, &mut rng, |s| {
            if s.len() == k {
                set = Some(s.to_set());
                false
            } else {
                true
            }
        });
        out.push(set.expect("component has at least k vertices"));
    }
    Ok(out)
}
