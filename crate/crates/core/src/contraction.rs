//! Contracting the components of `G[U]` to single vertices (`G*`), merging
//! the contracted vertices into one (`Ĝ`), and the checks that tie the
//! walks on these graphs back to the walk on `G`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, input, Result};
use crate::graph::{induced_components, internal_edges, Adjacency, MultiGraph, VertexSet};
use crate::walk::{absorbing_survival, stationary, LazyKernel};

/// The map `f : V(G) → V(G*)`. Vertices outside `U` keep their relative
/// order and are numbered `0..s`; block `i` becomes vertex `s + i`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContractionMap {
    pub source_order: usize,
    /// Components of `G[U]`, ordered by smallest vertex.
    pub blocks: Vec<VertexSet>,
    /// `f` as a table indexed by source vertex.
    pub image: Vec<u32>,
    /// Source vertex of each surviving `G*` vertex `0..s`.
    pub survivors: Vec<u32>,
}

impl ContractionMap {
    pub fn survivor_count(&self) -> usize {
        self.survivors.len()
    }

    /// `G*` id of block `i`.
    pub fn block_vertex(&self, i: usize) -> usize {
        self.survivors.len() + i
    }

    pub fn target_order(&self) -> usize {
        self.survivors.len() + self.blocks.len()
    }

    pub fn f(&self, v: usize) -> usize {
        self.image[v] as usize
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContractedPair {
    pub gstar: MultiGraph,
    pub map: ContractionMap,
    /// `U* = f(U)`.
    pub ustar: VertexSet,
}

/// `G*`: contract every connected component of `G[U]` to a vertex, drop the
/// edges inside components and keep the rest with multiplicity.
pub fn contract_components<G: Adjacency>(g: &G, u: &VertexSet) -> Result<ContractedPair> {
    let n = g.order();
    u.check_range(n)?;
    let blocks = induced_components(g, u)?;
    let in_u = u.mask(n);
    let survivors: Vec<u32> = (0..n as u32).filter(|&v| !in_u[v as usize]).collect();
    let s = survivors.len();
    let mut image = vec![0u32; n];
    for (i, &v) in survivors.iter().enumerate() {
        image[v as usize] = i as u32;
    }
    for (i, b) in blocks.iter().enumerate() {
        for v in b.iter() {
            image[v] = (s + i) as u32;
        }
    }
    let gstar = quotient(g, &image, s + blocks.len())?;
    debug_assert_eq!(
        gstar.size(),
        g.size()
            - blocks
                .iter()
                .map(|b| internal_edges(g, b).unwrap())
                .sum::<usize>()
    );
    let ustar = VertexSet::from_sorted((s as u32..(s + blocks.len()) as u32).collect());
    Ok(ContractedPair {
        gstar,
        map: ContractionMap {
            source_order: n,
            blocks,
            image,
            survivors,
        },
        ustar,
    })
}

fn quotient<G: Adjacency>(g: &G, image: &[u32], order: usize) -> Result<MultiGraph> {
    let mut edges = Vec::with_capacity(g.size());
    for x in 0..g.order() {
        for (y, c) in g.neighbors(x) {
            let (fx, fy) = (image[x] as usize, image[y] as usize);
            if x < y && fx != fy {
                edges.extend(std::iter::repeat((fx, fy)).take(c));
            }
        }
    }
    MultiGraph::from_edges(order, edges)
}

/// `Ĝ` and the id of the merged vertex `u*`.
#[derive(Clone, Debug, PartialEq)]
pub struct MergedGraph {
    pub graph: MultiGraph,
    pub merged: usize,
}

/// `Ĝ`: merge all of `U*` into a single new vertex `u*`. Vertices outside
/// `U*` keep their `G*` ids and `u*` takes the first id after them.
pub fn contract_to_vertex(pair: &ContractedPair) -> Result<MergedGraph> {
    let gs = &pair.gstar;
    if pair.ustar.is_empty() {
        return domain("nothing to merge: U* is empty");
    }
    pair.ustar.check_range(gs.order())?;
    let in_ustar = pair.ustar.mask(gs.order());
    for u in pair.ustar.iter() {
        if gs.targets(u).iter().any(|&w| in_ustar[w as usize]) {
            return domain(format!(
                "U* is not independent: vertex {u} has a neighbour in U*"
            ));
        }
    }
    let merged = gs.order() - pair.ustar.len();
    let mut image = vec![0u32; gs.order()];
    let mut next = 0u32;
    for v in 0..gs.order() {
        image[v] = if in_ustar[v] {
            merged as u32
        } else {
            next += 1;
            next - 1
        };
    }
    let graph = quotient(gs, &image, merged + 1)?;
    assert_eq!(
        graph.size(),
        gs.size(),
        "merging an independent set lost edges"
    );
    Ok(MergedGraph { graph, merged })
}

/// Single-stage `Ĝ` straight from `(G, U)`: vertices outside `U` are
/// numbered `0..s` in order and all of `U` becomes vertex `s`.
pub fn contract_set_to_vertex<G: Adjacency>(g: &G, u: &VertexSet) -> Result<MergedGraph> {
    let n = g.order();
    if u.is_empty() {
        return domain("nothing to merge: U is empty");
    }
    u.check_range(n)?;
    let in_u = u.mask(n);
    let merged = n - u.len();
    let mut image = vec![0u32; n];
    let mut next = 0u32;
    for v in 0..n {
        image[v] = if in_u[v] {
            merged as u32
        } else {
            next += 1;
            next - 1
        };
    }
    Ok(MergedGraph {
        graph: quotient(g, &image, merged + 1)?,
        merged,
    })
}

/// Total variation between `π_G` and `π_{G*}` on the union of the two
/// vertex sets: each is extended by zero where it is undefined, vertices
/// outside `U` are identified with their images.
pub fn stationary_tv<G: Adjacency>(g: &G, gstar: &MultiGraph, map: &ContractionMap) -> Result<f64> {
    if map.source_order != g.order() || map.target_order() != gstar.order() {
        return input("contraction map does not match the graphs");
    }
    let pi = stationary(g)?;
    let pis = stationary(gstar)?;
    let mut total = 0.0;
    for v in 0..g.order() {
        let fv = map.f(v);
        if fv < map.survivor_count() {
            total += (pi[v] - pis[fv]).abs();
        } else {
            total += pi[v];
        }
    }
    for i in 0..map.blocks.len() {
        total += pis[map.block_vertex(i)];
    }
    Ok(0.5 * total)
}

/// Largest gap over starts `v ∉ U` and `t <= t_max` between
/// `P[τ_U > t]` for the walk on `G` from `v` and `P[τ_{u*} > t]` for the
/// walk on `Ĝ` from the image of `v`. The two are equal in exact arithmetic.
pub fn coupling_survival_check<G: Adjacency>(g: &G, u: &VertexSet, t_max: usize) -> Result<f64> {
    let n = g.order();
    if u.is_empty() || u.len() >= n {
        return input("U must be a nonempty proper subset");
    }
    if !crate::graph::is_connected(g) {
        return domain("graph must be connected");
    }
    u.check_range(n)?;
    let hat = contract_set_to_vertex(g, u)?;
    let kg = LazyKernel::new(g)?;
    let kh = LazyKernel::new(&hat.graph)?;
    let in_u = u.mask(n);
    let mut absorbing_hat = vec![false; hat.graph.order()];
    absorbing_hat[hat.merged] = true;
    let starts: Vec<(usize, usize)> = (0..n)
        .filter(|&v| !in_u[v])
        .enumerate()
        .map(|(i, v)| (v, i))
        .collect();
    let gap = starts
        .par_iter()
        .map(|&(v, hv)| {
            let mut mu = vec![0.0; n];
            mu[v] = 1.0;
            let a = absorbing_survival(&kg, &in_u, &mu, t_max);
            let mut nu = vec![0.0; hat.graph.order()];
            nu[hv] = 1.0;
            let b = absorbing_survival(&kh, &absorbing_hat, &nu, t_max);
            a.survival
                .iter()
                .zip(&b.survival)
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max);
    Ok(gap)
}
