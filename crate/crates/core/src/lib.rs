//! Lazy random walks on graphs with small bottlenecks.

pub mod conductance;
pub mod contraction;
pub mod densest;
pub mod enumerate;
pub mod error;
pub mod experiments;
pub mod fvtl;
pub mod generators;
pub mod graph;
pub mod io;
pub mod spreader;
pub mod walk;

pub use error::{Error, Result};
pub use graph::{Adjacency, Graph, MultiGraph, VertexSet};
