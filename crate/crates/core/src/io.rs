//! Edge-list text format.
//!
//! ```text
//! n m
//! u v
//! ...
//! ```
//!
//! Ids are 0-based. Multigraphs use the same format with a repeated line per
//! parallel edge. Parsing is strict: loops, ids `>= n`, a line count that
//! disagrees with `m`, and (for simple graphs) repeated edges are errors.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::{Adjacency, Graph, MultiGraph};

fn parse_pairs(text: &str) -> Result<(usize, Vec<(usize, usize)>)> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    let (hline, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        msg: "missing header line \"n m\"".into(),
    })?;
    let (n, m) = two_numbers(hline, header)?;
    let mut edges = Vec::with_capacity(m);
    for (line, l) in lines {
        let (u, v) = two_numbers(line, l)?;
        if u >= n || v >= n {
            return Err(Error::Parse {
                line,
                msg: format!("vertex id outside 0..{n}"),
            });
        }
        if u == v {
            return Err(Error::Parse {
                line,
                msg: format!("loop at vertex {u}"),
            });
        }
        edges.push((u, v));
    }
    if edges.len() != m {
        return Err(Error::Parse {
            line: hline,
            msg: format!("header announces {m} edges but {} were given", edges.len()),
        });
    }
    Ok((n, edges))
}

fn two_numbers(line: usize, l: &str) -> Result<(usize, usize)> {
    let mut it = l.split_whitespace();
    let mut next = || -> Result<usize> {
        it.next()
            .ok_or_else(|| Error::Parse {
                line,
                msg: "expected two integers".into(),
            })?
            .parse()
            .map_err(|e| Error::Parse {
                line,
                msg: format!("{e}"),
            })
    };
    let a = next()?;
    let b = next()?;
    if it.next().is_some() {
        return Err(Error::Parse {
            line,
            msg: "expected exactly two integers".into(),
        });
    }
    Ok((a, b))
}

pub fn parse_graph(text: &str) -> Result<Graph> {
    let (n, edges) = parse_pairs(text)?;
    Graph::from_edges(n, edges)
}

pub fn parse_multigraph(text: &str) -> Result<MultiGraph> {
    let (n, edges) = parse_pairs(text)?;
    MultiGraph::from_edges(n, edges)
}

pub fn read_graph(path: impl AsRef<Path>) -> Result<Graph> {
    parse_graph(&std::fs::read_to_string(path)?)
}

pub fn read_multigraph(path: impl AsRef<Path>) -> Result<MultiGraph> {
    parse_multigraph(&std::fs::read_to_string(path)?)
}

pub fn format_graph(g: &Graph) -> String {
    let mut out = String::new();
    writeln!(out, "{} {}", g.order(), g.size()).unwrap();
    for (u, v) in g.edges() {
        writeln!(out, "{u} {v}").unwrap();
    }
    out
}

pub fn format_multigraph(g: &MultiGraph) -> String {
    let mut out = String::new();
    writeln!(out, "{} {}", g.order(), g.size()).unwrap();
    for (u, v, c) in g.edges() {
        for _ in 0..c {
            writeln!(out, "{u} {v}").unwrap();
        }
    }
    out
}

/// Whitespace-separated vertex ids (`#` starts a comment).
pub fn parse_vertex_list(text: &str) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for (i, l) in text.lines().enumerate() {
        for tok in l.split('#').next().unwrap().split_whitespace() {
            out.push(tok.parse().map_err(|e| Error::Parse {
                line: i + 1,
                msg: format!("{tok:?}: {e}"),
            })?);
        }
    }
    Ok(out)
}
