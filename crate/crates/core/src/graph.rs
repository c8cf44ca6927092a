//! Sparse labelled graphs and multigraphs.
//!
//! Vertices are dense ids `0..n`. Both [`Graph`] (simple) and [`MultiGraph`]
//! (parallel edges, no loops) are stored as compressed adjacency arrays with
//! sorted, distinct neighbour lists; the multigraph additionally carries a
//! multiplicity per adjacency entry. Every algorithm in the crate is written
//! against the [`Adjacency`] trait so that it runs unchanged on either.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{input, Result};

/// Read access shared by [`Graph`] and [`MultiGraph`].
///
/// Degrees and edge counts always include multiplicity.
pub trait Adjacency: Sync {
    fn order(&self) -> usize;
    /// Number of edges, counted with multiplicity.
    fn size(&self) -> usize;
    fn degree(&self, v: usize) -> usize;
    /// Distinct neighbours of `v`, sorted ascending.
    fn targets(&self, v: usize) -> &[u32];
    /// Multiplicities aligned with [`Adjacency::targets`]; `None` when every
    /// multiplicity is one.
    fn multiplicities(&self, v: usize) -> Option<&[u32]>;

    fn neighbors(&self, v: usize) -> Neighbors<'_> {
        Neighbors {
            targets: self.targets(v),
            mult: self.multiplicities(v),
            pos: 0,
        }
    }

    fn multiplicity(&self, u: usize, v: usize) -> usize {
        let t = self.targets(u);
        match t.binary_search(&(v as u32)) {
            Ok(i) => self.multiplicities(u).map_or(1, |m| m[i] as usize),
            Err(_) => 0,
        }
    }
}

/// Iterator over `(neighbour, multiplicity)` pairs.
#[derive(Clone, Debug)]
pub struct Neighbors<'a> {
    targets: &'a [u32],
    mult: Option<&'a [u32]>,
    pos: usize,
}

impl Iterator for Neighbors<'_> {
    type Item = (usize, usize);

    #[inline]
    fn next(&mut self) -> Option<Self::Item> {
        let t = *self.targets.get(self.pos)?;
        let m = self.mult.map_or(1, |m| m[self.pos]);
        self.pos += 1;
        Some((t as usize, m as usize))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let r = self.targets.len() - self.pos;
        (r, Some(r))
    }
}

impl ExactSizeIterator for Neighbors<'_> {}

#[derive(Clone, Debug, PartialEq, Eq)]
struct Csr {
    offsets: Vec<usize>,
    targets: Vec<u32>,
    mult: Option<Vec<u32>>,
    degree: Vec<usize>,
    m: usize,
}

impl Csr {
    /// Builds from half-edges `(u, v)` already containing both directions.
    /// Repeated half-edges are merged; `keep_mult` decides whether their
    /// count is recorded.
    fn from_half_edges(n: usize, mut half: Vec<(u32, u32)>, keep_mult: bool) -> Csr {
        half.sort_unstable();
        let mut offsets = vec![0usize; n + 1];
        let mut targets = Vec::with_capacity(half.len());
        let mut mult = Vec::new();
        let mut degree = vec![0usize; n];
        let mut i = 0;
        while i < half.len() {
            let (u, v) = half[i];
            let mut j = i + 1;
            while j < half.len() && half[j] == (u, v) {
                j += 1;
            }
            let c = if keep_mult { j - i } else { 1 };
            targets.push(v);
            if keep_mult {
                mult.push(c as u32);
            }
            offsets[u as usize + 1] += 1;
            degree[u as usize] += c;
            i = j;
        }
        for k in 0..n {
            offsets[k + 1] += offsets[k];
        }
        let total: usize = degree.iter().sum();
        let mult = if keep_mult && mult.iter().any(|&c| c > 1) {
            Some(mult)
        } else {
            None
        };
        Csr {
            offsets,
            targets,
            mult,
            degree,
            m: total / 2,
        }
    }

    #[inline]
    fn targets(&self, v: usize) -> &[u32] {
        &self.targets[self.offsets[v]..self.offsets[v + 1]]
    }

    #[inline]
    fn mults(&self, v: usize) -> Option<&[u32]> {
        self.mult
            .as_ref()
            .map(|m| &m[self.offsets[v]..self.offsets[v + 1]])
    }
}

fn check_edge(n: usize, u: usize, v: usize) -> Result<()> {
    if u >= n || v >= n {
        return input(format!("edge ({u}, {v}) has an endpoint outside 0..{n}"));
    }
    if u == v {
        return input(format!("loop at vertex {u}"));
    }
    Ok(())
}

/// A simple undirected graph on `0..n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    csr: Csr,
}

impl Graph {
    pub fn empty(n: usize) -> Graph {
        Graph {
            csr: Csr::from_half_edges(n, Vec::new(), false),
        }
    }

    /// Strict constructor: loops, out-of-range ids and repeated edges are errors.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Graph>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut half = Vec::new();
        for (u, v) in edges {
            check_edge(n, u, v)?;
            half.push((u as u32, v as u32));
            half.push((v as u32, u as u32));
        }
        let expected = half.len() / 2;
        let csr = Csr::from_half_edges(n, half, false);
        if csr.m != expected {
            return input("repeated edge in a simple graph");
        }
        Ok(Graph { csr })
    }

    /// Like [`Graph::from_edges`] but repeated edges collapse into one.
    pub fn from_edges_dedup<I>(n: usize, edges: I) -> Result<Graph>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut half = Vec::new();
        for (u, v) in edges {
            check_edge(n, u, v)?;
            half.push((u as u32, v as u32));
            half.push((v as u32, u as u32));
        }
        Ok(Graph {
            csr: Csr::from_half_edges(n, half, false),
        })
    }

    /// Edges `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.csr.m);
        for u in 0..self.order() {
            for &v in self.targets(u) {
                if (v as usize) > u {
                    out.push((u, v as usize));
                }
            }
        }
        out
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.order() && self.targets(u).binary_search(&(v as u32)).is_ok()
    }

    /// Edge-set union on the same vertex set.
    pub fn union(&self, other: &Graph) -> Result<Graph> {
        if self.order() != other.order() {
            return input("union of graphs with different vertex counts");
        }
        Graph::from_edges_dedup(self.order(), self.edges().into_iter().chain(other.edges()))
    }

    /// The subgraph induced by `s`, relabelled densely in increasing id
    /// order. The second value maps new ids back to old ones.
    pub fn induced_subgraph(&self, s: &VertexSet) -> Result<(Graph, Vec<usize>)> {
        s.check_range(self.order())?;
        let mut new_id = vec![u32::MAX; self.order()];
        for (i, v) in s.iter().enumerate() {
            new_id[v] = i as u32;
        }
        let mut edges = Vec::new();
        for u in s.iter() {
            for &v in self.targets(u) {
                let nv = new_id[v as usize];
                if nv != u32::MAX && (v as usize) > u {
                    edges.push((new_id[u] as usize, nv as usize));
                }
            }
        }
        Ok((Graph::from_edges(s.len(), edges)?, s.iter().collect()))
    }

    pub fn to_multigraph(&self) -> MultiGraph {
        MultiGraph {
            csr: self.csr.clone(),
        }
    }

    pub fn max_degree(&self) -> usize {
        self.csr.degree.iter().copied().max().unwrap_or(0)
    }
}

impl Adjacency for Graph {
    #[inline]
    fn order(&self) -> usize {
        self.csr.degree.len()
    }
    #[inline]
    fn size(&self) -> usize {
        self.csr.m
    }
    #[inline]
    fn degree(&self, v: usize) -> usize {
        self.csr.degree[v]
    }
    #[inline]
    fn targets(&self, v: usize) -> &[u32] {
        self.csr.targets(v)
    }
    #[inline]
    fn multiplicities(&self, _v: usize) -> Option<&[u32]> {
        None
    }
}

/// An undirected multigraph on `0..n`: parallel edges allowed, loops forbidden.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultiGraph {
    csr: Csr,
}

impl MultiGraph {
    /// Repeated pairs accumulate multiplicity. Loops are rejected.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<MultiGraph>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut half = Vec::new();
        for (u, v) in edges {
            check_edge(n, u, v)?;
            half.push((u as u32, v as u32));
            half.push((v as u32, u as u32));
        }
        Ok(MultiGraph {
            csr: Csr::from_half_edges(n, half, true),
        })
    }

    /// Builds from pairs that may contain loops (as produced by a quotient
    /// map); loops are dropped, everything else keeps its multiplicity.
    pub fn from_edges_drop_loops<I>(n: usize, edges: I) -> Result<MultiGraph>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        MultiGraph::from_edges(n, edges.into_iter().filter(|(u, v)| u != v))
    }

    /// Edges `(u, v, multiplicity)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize, usize)> {
        let mut out = Vec::new();
        for u in 0..self.order() {
            for (v, c) in self.neighbors(u) {
                if v > u {
                    out.push((u, v, c));
                }
            }
        }
        out
    }

    pub fn is_simple(&self) -> bool {
        self.csr.mult.is_none()
    }
}

impl Adjacency for MultiGraph {
    #[inline]
    fn order(&self) -> usize {
        self.csr.degree.len()
    }
    #[inline]
    fn size(&self) -> usize {
        self.csr.m
    }
    #[inline]
    fn degree(&self, v: usize) -> usize {
        self.csr.degree[v]
    }
    #[inline]
    fn targets(&self, v: usize) -> &[u32] {
        self.csr.targets(v)
    }
    #[inline]
    fn multiplicities(&self, v: usize) -> Option<&[u32]> {
        self.csr.mults(v)
    }
}

impl From<&Graph> for MultiGraph {
    fn from(g: &Graph) -> Self {
        g.to_multigraph()
    }
}

/// A subset of the vertex set, kept as a sorted duplicate-free id list.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VertexSet(Vec<u32>);

impl VertexSet {
    pub fn new<I: IntoIterator<Item = usize>>(members: I) -> VertexSet {
        let mut v: Vec<u32> = members.into_iter().map(|x| x as u32).collect();
        v.sort_unstable();
        v.dedup();
        VertexSet(v)
    }

    /// Validating constructor: every member must lie in `0..n`.
    pub fn within<I: IntoIterator<Item = usize>>(n: usize, members: I) -> Result<VertexSet> {
        let s = VertexSet::new(members);
        s.check_range(n)?;
        Ok(s)
    }

    pub(crate) fn from_sorted(v: Vec<u32>) -> VertexSet {
        debug_assert!(v.windows(2).all(|w| w[0] < w[1]));
        VertexSet(v)
    }

    pub fn full(n: usize) -> VertexSet {
        VertexSet((0..n as u32).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, v: usize) -> bool {
        self.0.binary_search(&(v as u32)).is_ok()
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = usize> + '_ {
        self.0.iter().map(|&v| v as usize)
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    pub fn to_vec(&self) -> Vec<usize> {
        self.iter().collect()
    }

    pub fn complement(&self, n: usize) -> VertexSet {
        let mask = self.mask(n);
        VertexSet((0..n as u32).filter(|&v| !mask[v as usize]).collect())
    }

    pub fn union(&self, other: &VertexSet) -> VertexSet {
        VertexSet::new(self.iter().chain(other.iter()))
    }

    /// Membership mask over `0..n`. Members `>= n` are ignored.
    pub fn mask(&self, n: usize) -> Vec<bool> {
        let mut m = vec![false; n];
        for v in self.iter().filter(|&v| v < n) {
            m[v] = true;
        }
        m
    }

    pub fn check_range(&self, n: usize) -> Result<()> {
        match self.0.last() {
            Some(&v) if v as usize >= n => input(format!("vertex {v} outside 0..{n}")),
            _ => Ok(()),
        }
    }
}

impl FromIterator<usize> for VertexSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        VertexSet::new(iter)
    }
}

/// Edge counts of a vertex set, all with multiplicity.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SetStats {
    pub size: usize,
    /// `e_G(S)`
    pub internal: usize,
    /// `|∂_G(S)|`
    pub boundary: usize,
    /// `deg_G(S)`
    pub degree: usize,
}

pub fn set_stats<G: Adjacency>(g: &G, s: &VertexSet) -> Result<SetStats> {
    s.check_range(g.order())?;
    let mask = s.mask(g.order());
    let mut twice_internal = 0;
    let mut boundary = 0;
    let mut degree = 0;
    for u in s.iter() {
        degree += g.degree(u);
        for (v, c) in g.neighbors(u) {
            if mask[v] {
                twice_internal += c;
            } else {
                boundary += c;
            }
        }
    }
    Ok(SetStats {
        size: s.len(),
        internal: twice_internal / 2,
        boundary,
        degree,
    })
}

/// `|∂_G(S)|`: edges with exactly one endpoint in `s`.
pub fn boundary_size<G: Adjacency>(g: &G, s: &VertexSet) -> Result<usize> {
    Ok(set_stats(g, s)?.boundary)
}

/// `e_G(S)`: edges with both endpoints in `s`.
pub fn internal_edges<G: Adjacency>(g: &G, s: &VertexSet) -> Result<usize> {
    Ok(set_stats(g, s)?.internal)
}

/// `deg_G(S)`, the sum of member degrees.
pub fn degree_sum<G: Adjacency>(g: &G, s: &VertexSet) -> Result<usize> {
    Ok(set_stats(g, s)?.degree)
}

/// Whether the induced subgraph `G[S]` is connected.
pub fn is_connected_set<G: Adjacency>(g: &G, s: &VertexSet) -> Result<bool> {
    if s.is_empty() {
        return input("connectivity of the empty set is undefined");
    }
    s.check_range(g.order())?;
    let mask = s.mask(g.order());
    let mut seen = vec![false; g.order()];
    let start = s.as_slice()[0] as usize;
    seen[start] = true;
    let mut stack = vec![start];
    let mut reached = 1;
    while let Some(u) = stack.pop() {
        for &v in g.targets(u) {
            let v = v as usize;
            if mask[v] && !seen[v] {
                seen[v] = true;
                reached += 1;
                stack.push(v);
            }
        }
    }
    Ok(reached == s.len())
}

/// Component label per vertex, labels assigned in order of smallest member.
pub fn component_labels<G: Adjacency>(g: &G) -> (Vec<u32>, usize) {
    let n = g.order();
    let mut label = vec![u32::MAX; n];
    let mut count = 0u32;
    let mut queue = VecDeque::new();
    for s in 0..n {
        if label[s] != u32::MAX {
            continue;
        }
        label[s] = count;
        queue.push_back(s);
        while let Some(u) = queue.pop_front() {
            for &v in g.targets(u) {
                if label[v as usize] == u32::MAX {
                    label[v as usize] = count;
                    queue.push_back(v as usize);
                }
            }
        }
        count += 1;
    }
    (label, count as usize)
}

/// Partition of the vertex set into connected components, ordered by
/// smallest member.
pub fn connected_components<G: Adjacency>(g: &G) -> Vec<VertexSet> {
    let (label, count) = component_labels(g);
    let mut blocks = vec![Vec::new(); count];
    for (v, &l) in label.iter().enumerate() {
        blocks[l as usize].push(v as u32);
    }
    blocks.into_iter().map(VertexSet::from_sorted).collect()
}

pub fn is_connected<G: Adjacency>(g: &G) -> bool {
    g.order() > 0 && component_labels(g).1 == 1
}

/// A maximum-order component and its order. Ties go to the component with
/// the smallest minimum label. Returns an empty set for the null graph.
pub fn largest_component<G: Adjacency>(g: &G) -> (VertexSet, usize) {
    let best = connected_components(g)
        .into_iter()
        .enumerate()
        .max_by_key(|(i, b)| (b.len(), std::cmp::Reverse(*i)))
        .map(|(_, b)| b)
        .unwrap_or_default();
    let order = best.len();
    (best, order)
}

/// Components of the subgraph induced by `s`, ordered by smallest member.
pub fn induced_components<G: Adjacency>(g: &G, s: &VertexSet) -> Result<Vec<VertexSet>> {
    s.check_range(g.order())?;
    let mask = s.mask(g.order());
    let mut seen = vec![false; g.order()];
    let mut blocks = Vec::new();
    for start in s.iter() {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut block = vec![start];
        let mut stack = vec![start];
        while let Some(u) = stack.pop() {
            for &v in g.targets(u) {
                let v = v as usize;
                if mask[v] && !seen[v] {
                    seen[v] = true;
                    block.push(v);
                    stack.push(v);
                }
            }
        }
        blocks.push(VertexSet::new(block));
    }
    Ok(blocks)
}
