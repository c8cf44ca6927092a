//! Exact maximum-density subgraph (`max e(S)/|S|`) by parametric min cut.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::graph::{Adjacency, VertexSet};

struct FlowNet {
    head: Vec<usize>,
    next: Vec<usize>,
    to: Vec<usize>,
    cap: Vec<i64>,
}

const NIL: usize = usize::MAX;

impl FlowNet {
    fn new(nodes: usize) -> Self {
        FlowNet {
            head: vec![NIL; nodes],
            next: Vec::new(),
            to: Vec::new(),
            cap: Vec::new(),
        }
    }

    fn arc(&mut self, u: usize, v: usize, forward: i64, backward: i64) {
        for (a, b, c) in [(u, v, forward), (v, u, backward)] {
            self.to.push(b);
            self.cap.push(c);
            self.next.push(self.head[a]);
            self.head[a] = self.to.len() - 1;
        }
    }

    fn levels(&self, s: usize, t: usize, level: &mut [u32]) -> bool {
        level.fill(u32::MAX);
        level[s] = 0;
        let mut q = VecDeque::from([s]);
        while let Some(u) = q.pop_front() {
            let mut e = self.head[u];
            while e != NIL {
                let v = self.to[e];
                if self.cap[e] > 0 && level[v] == u32::MAX {
                    level[v] = level[u] + 1;
                    q.push_back(v);
                }
                e = self.next[e];
            }
        }
        level[t] != u32::MAX
    }

    fn push(&mut self, u: usize, t: usize, limit: i64, level: &[u32], it: &mut [usize]) -> i64 {
        if u == t {
            return limit;
        }
        while it[u] != NIL {
            let e = it[u];
            let v = self.to[e];
            if self.cap[e] > 0 && level[v] == level[u] + 1 {
                let got = self.push(v, t, limit.min(self.cap[e]), level, it);
                if got > 0 {
                    self.cap[e] -= got;
                    self.cap[e ^ 1] += got;
                    return got;
                }
            }
            it[u] = self.next[e];
        }
        0
    }

    /// Dinic max flow; afterwards the residual graph defines the min cut.
    fn max_flow(&mut self, s: usize, t: usize) -> i64 {
        let n = self.head.len();
        let mut level = vec![0u32; n];
        let mut flow = 0;
        while self.levels(s, t, &mut level) {
            let mut it = self.head.clone();
            loop {
                let f = self.push(s, t, i64::MAX, &level, &mut it);
                if f == 0 {
                    break;
                }
                flow += f;
            }
        }
        flow
    }

    fn source_side(&self, s: usize) -> Vec<bool> {
        let mut seen = vec![false; self.head.len()];
        seen[s] = true;
        let mut stack = vec![s];
        while let Some(u) = stack.pop() {
            let mut e = self.head[u];
            while e != NIL {
                let v = self.to[e];
                if self.cap[e] > 0 && !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
                e = self.next[e];
            }
        }
        seen
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Densest {
    pub set: VertexSet,
    /// `e(S)`, with multiplicity.
    pub edges: usize,
    pub density: f64,
}

impl Densest {
    /// `e(S) > D|S|`.
    pub fn exceeds(&self, d: f64) -> bool {
        self.edges as f64 > d * self.set.len() as f64
    }
}

/// Some `S` with `q·e(S) > p·|S|`, or `None` if no set beats `p/q`.
fn denser_than<G: Adjacency>(g: &G, p: i64, q: i64) -> Option<Vec<usize>> {
    let n = g.order();
    let m = g.size() as i64;
    let (s, t) = (n, n + 1);
    let big = q * m;
    let mut net = FlowNet::new(n + 2);
    for v in 0..n {
        net.arc(s, v, big, 0);
        net.arc(v, t, big + 2 * p - q * g.degree(v) as i64, 0);
        for (u, c) in g.neighbors(v) {
            if u > v {
                net.arc(v, u, q * c as i64, q * c as i64);
            }
        }
    }
    // cut(S) = big·n + 2(p|S| − q·e(S))
    let flow = net.max_flow(s, t);
    if flow >= big * n as i64 {
        return None;
    }
    let side = net.source_side(s);
    Some((0..n).filter(|&v| side[v]).collect())
}

/// The maximum-density vertex set `argmax e(S)/|S|`, by Dinkelbach
/// iteration on the parametric min cut. `None` on the null graph.
pub fn densest_subgraph<G: Adjacency>(g: &G) -> Option<Densest> {
    let n = g.order();
    if n == 0 {
        return None;
    }
    let mut set: Vec<usize> = (0..n).collect();
    let mut edges = g.size();
    while let Some(better) = denser_than(g, edges as i64, set.len() as i64) {
        let vs = VertexSet::from_sorted(better.iter().map(|&v| v as u32).collect());
        let e = crate::graph::internal_edges(g, &vs).expect("in range");
        debug_assert!(e * set.len() > edges * better.len());
        set = better;
        edges = e;
    }
    let len = set.len();
    Some(Densest {
        set: set.into_iter().collect(),
        edges,
        density: edges as f64 / len as f64,
    })
}
