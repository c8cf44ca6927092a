use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyModule;
use serde::Serialize;

use mixlab::conductance::{self as cond, ProfileMode, ProfileOptions};
use mixlab::contraction;
use mixlab::experiments::{self, ExperimentConfig};
use mixlab::fvtl::{self, FvtlOptions};
use mixlab::generators::{self, HostSpec, Seed};
use mixlab::spreader::{self, SpreaderParams};
use mixlab::walk::{self, MixingOptions, StartSelection};
use mixlab::{io, Adjacency, Error, VertexSet};

fn err(e: Error) -> PyErr {
    match e {
        Error::Io(e) => PyOSError::new_err(e.to_string()),
        Error::Cap { .. } | Error::Refused(_) => PyRuntimeError::new_err(e.to_string()),
        e => PyValueError::new_err(e.to_string()),
    }
}

fn to_py<'py, T: Serialize>(py: Python<'py>, v: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(v).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    PyModule::import(py, "json")?.call_method1("loads", (text,))
}

fn seed(s: u64) -> Seed {
    Seed::new(s)
}

/// Simple undirected graph on vertices `0..n`.
#[pyclass(name = "Graph", module = "mixlab", frozen)]
struct PyGraph {
    inner: mixlab::Graph,
}

fn wrap(g: mixlab::Graph) -> PyGraph {
    PyGraph { inner: g }
}

#[pymethods]
impl PyGraph {
    #[new]
    fn new(n: usize, edges: Vec<(usize, usize)>) -> PyResult<Self> {
        mixlab::Graph::from_edges(n, edges).map(wrap).map_err(err)
    }

    /// Parses the `n m` edge-list text format.
    #[staticmethod]
    fn from_edge_list(text: &str) -> PyResult<Self> {
        io::parse_graph(text).map(wrap).map_err(err)
    }

    #[staticmethod]
    fn read(path: &str) -> PyResult<Self> {
        io::read_graph(path).map(wrap).map_err(err)
    }

    fn to_edge_list(&self) -> String {
        io::format_graph(&self.inner)
    }

    #[getter]
    fn order(&self) -> usize {
        self.inner.order()
    }

    #[getter]
    fn size(&self) -> usize {
        self.inner.size()
    }

    fn degree(&self, v: usize) -> PyResult<usize> {
        if v >= self.inner.order() {
            return Err(PyValueError::new_err(format!("vertex {v} out of range")));
        }
        Ok(self.inner.degree(v))
    }

    fn edges(&self) -> Vec<(usize, usize)> {
        self.inner.edges()
    }

    fn is_connected(&self) -> bool {
        mixlab::graph::is_connected(&self.inner)
    }

    /// The largest component and the original ids of its vertices.
    fn largest_component(&self) -> PyResult<(PyGraph, Vec<usize>)> {
        let (c, _) = mixlab::graph::largest_component(&self.inner);
        let (g, ids) = self.inner.induced_subgraph(&c).map_err(err)?;
        Ok((wrap(g), ids))
    }

    fn degeneracy(&self) -> usize {
        generators::degeneracy(&self.inner).value
    }

    fn __repr__(&self) -> String {
        format!(
            "Graph(order={}, size={})",
            self.inner.order(),
            self.inner.size()
        )
    }
}

#[pyfunction]
#[pyo3(signature = (n, p, seed=0))]
fn gnp(n: usize, p: f64, seed: u64) -> PyResult<PyGraph> {
    generators::gen_gnp(n, p, self::seed(seed))
        .map(wrap)
        .map_err(err)
}

#[pyfunction]
#[pyo3(signature = (graph, eps, seed=0))]
fn perturb(graph: PyRef<'_, PyGraph>, eps: f64, seed: u64) -> PyResult<PyGraph> {
    generators::perturb(&graph.inner, eps, self::seed(seed))
        .map(wrap)
        .map_err(err)
}

#[pyfunction]
#[pyo3(signature = (n, k, eps, seed=0))]
fn newman_watts(n: usize, k: usize, eps: f64, seed: u64) -> PyResult<PyGraph> {
    generators::gen_newman_watts(n, k, eps, self::seed(seed))
        .map(wrap)
        .map_err(err)
}

/// `host` uses the `kind:key=value,...` syntax, e.g. `random-regular:n=100,d=6`.
#[pyfunction]
#[pyo3(signature = (host, p, seed=0, host_seed=1))]
fn percolate(host: &str, p: f64, seed: u64, host_seed: u64) -> PyResult<PyGraph> {
    let spec: HostSpec = host.parse().map_err(err)?;
    generators::percolate_host(&spec, p, Seed::new(host_seed), Seed::new(seed))
        .map(wrap)
        .map_err(err)
}

#[pyfunction]
fn path_graph(n: usize) -> PyGraph {
    wrap(generators::path_graph(n))
}

#[pyfunction]
fn cycle_graph(n: usize) -> PyResult<PyGraph> {
    generators::cycle_graph(n).map(wrap).map_err(err)
}

#[pyfunction]
fn complete_graph(n: usize) -> PyGraph {
    wrap(generators::complete_graph(n))
}

#[pyfunction]
fn star_graph(leaves: usize) -> PyGraph {
    wrap(generators::star_graph(leaves))
}

#[pyfunction]
fn stationary(graph: PyRef<'_, PyGraph>) -> PyResult<Vec<f64>> {
    walk::stationary(&graph.inner)
        .map(|p| p.into_vec())
        .map_err(err)
}

fn mixing_options(
    eps: f64,
    mode: &str,
    samples: usize,
    seed: u64,
    t_cap: Option<usize>,
    average: bool,
    curve: bool,
) -> PyResult<MixingOptions> {
    let seed = Seed::new(seed);
    let starts = match (mode, average) {
        ("exact", _) => StartSelection::All,
        ("sampled", true) => StartSelection::Sampled {
            count: samples,
            seed,
        },
        ("sampled", false) => StartSelection::Candidates {
            count: samples,
            seed,
        },
        _ => return Err(PyValueError::new_err("mode must be 'exact' or 'sampled'")),
    };
    Ok(MixingOptions {
        eps,
        t_cap,
        starts,
        curve,
    })
}

/// Worst-start mixing time report as a dict.
#[pyfunction]
#[pyo3(signature = (graph, eps=0.25, mode="exact", samples=256, seed=0, t_cap=None, curve=false))]
fn mixing_time<'py>(
    py: Python<'py>,
    graph: PyRef<'py, PyGraph>,
    eps: f64,
    mode: &str,
    samples: usize,
    seed: u64,
    t_cap: Option<usize>,
    curve: bool,
) -> PyResult<Bound<'py, PyAny>> {
    let opts = mixing_options(eps, mode, samples, seed, t_cap, false, curve)?;
    let g = &graph.inner;
    let r = py
        .detach(|| walk::mixing_time_with(g, &opts))
        .map_err(err)?;
    to_py(py, &r)
}

/// Average-start mixing time report as a dict.
#[pyfunction]
#[pyo3(signature = (graph, eps=0.25, mode="exact", samples=256, seed=0, t_cap=None, curve=false))]
fn avg_mixing_time<'py>(
    py: Python<'py>,
    graph: PyRef<'py, PyGraph>,
    eps: f64,
    mode: &str,
    samples: usize,
    seed: u64,
    t_cap: Option<usize>,
    curve: bool,
) -> PyResult<Bound<'py, PyAny>> {
    let opts = mixing_options(eps, mode, samples, seed, t_cap, true, curve)?;
    let g = &graph.inner;
    let r = py
        .detach(|| walk::avg_mixing_time_with(g, &opts))
        .map_err(err)?;
    to_py(py, &r)
}

#[pyfunction]
fn tv_distance(mu: Vec<f64>, nu: Vec<f64>) -> PyResult<f64> {
    let mu = walk::ProbDist::new(mu).map_err(err)?;
    let nu = walk::ProbDist::new(nu).map_err(err)?;
    walk::tv_distance(&mu, &nu).map_err(err)
}

#[pyfunction]
fn conductance(graph: PyRef<'_, PyGraph>, s: Vec<usize>) -> PyResult<f64> {
    let set = VertexSet::within(graph.inner.order(), s).map_err(err)?;
    cond::conductance(&graph.inner, &set)
        .map(|c| c.phi)
        .map_err(err)
}

/// Conductance profile and the resulting mixing-time bound as a dict.
#[pyfunction]
#[pyo3(signature = (graph, c0=1.0, mode="exact", budget=64, seed=0))]
fn fr_bound<'py>(
    py: Python<'py>,
    graph: PyRef<'py, PyGraph>,
    c0: f64,
    mode: &str,
    budget: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let mode = match mode {
        "exact" => ProfileMode::Exact,
        "sampled" => ProfileMode::Sampled,
        _ => return Err(PyValueError::new_err("mode must be 'exact' or 'sampled'")),
    };
    let opts = ProfileOptions {
        mode,
        budget,
        seed: Seed::new(seed),
        ..Default::default()
    };
    let g = &graph.inner;
    let r = py.detach(|| cond::fr_bound(g, c0, &opts)).map_err(err)?;
    to_py(py, &r)
}

/// Spreader verdicts and the bad-set union as a dict.
#[pyfunction]
#[pyo3(signature = (graph, alpha, D, k_cap=None))]
#[allow(non_snake_case)]
fn spreader_check<'py>(
    py: Python<'py>,
    graph: PyRef<'py, PyGraph>,
    alpha: f64,
    D: f64,
    k_cap: Option<usize>,
) -> PyResult<Bound<'py, PyAny>> {
    let params = SpreaderParams::new(alpha, D, graph.inner.order()).map_err(err)?;
    let g = &graph.inner;
    let (cert, bad) = py
        .detach(|| spreader::analyze(g, &params, k_cap))
        .map_err(err)?;
    to_py(
        py,
        &serde_json::json!({ "certificate": cert, "bad_set": bad }),
    )
}

/// Contracts every component of `G[U]` and then all of `U*`; returns the
/// edge lists of both graphs and the stationary comparison.
#[pyfunction]
fn contract<'py>(
    py: Python<'py>,
    graph: PyRef<'py, PyGraph>,
    u: Vec<usize>,
) -> PyResult<Bound<'py, PyAny>> {
    let g = &graph.inner;
    let set = VertexSet::within(g.order(), u).map_err(err)?;
    let pair = contraction::contract_components(g, &set).map_err(err)?;
    let hat = if pair.ustar.is_empty() {
        None
    } else {
        Some(contraction::contract_to_vertex(&pair).map_err(err)?)
    };
    let tv = if pair.gstar.size() > 0 {
        Some(contraction::stationary_tv(g, &pair.gstar, &pair.map).map_err(err)?)
    } else {
        None
    };
    to_py(
        py,
        &serde_json::json!({
            "gstar": io::format_multigraph(&pair.gstar),
            "image": pair.map.image,
            "ustar": pair.ustar,
            "ghat": hat.as_ref().map(|h| io::format_multigraph(&h.graph)),
            "merged": hat.as_ref().map(|h| h.merged),
            "stationary_tv": tv,
        }),
    )
}

#[pyfunction]
#[pyo3(signature = (graph, u, t_max))]
fn coupling_survival_check(
    graph: PyRef<'_, PyGraph>,
    u: Vec<usize>,
    t_max: usize,
) -> PyResult<f64> {
    let set = VertexSet::within(graph.inner.order(), u).map_err(err)?;
    contraction::coupling_survival_check(&graph.inner, &set, t_max).map_err(err)
}

/// First-visit diagnostics at `u` as a dict.
#[pyfunction]
#[pyo3(signature = (graph, u, T=None, tol=None, seed=0))]
#[allow(non_snake_case)]
fn fvtl_report<'py>(
    py: Python<'py>,
    graph: PyRef<'py, PyGraph>,
    u: usize,
    T: Option<usize>,
    tol: Option<f64>,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let mut opts = FvtlOptions {
        t: T,
        seed: Seed::new(seed),
        ..Default::default()
    };
    if let Some(tol) = tol {
        opts.tol = tol;
    }
    let g = &graph.inner;
    let r = py.detach(|| fvtl::fvtl_report(g, u, &opts)).map_err(err)?;
    to_py(py, &r)
}

/// Runs an experiment config given as key=value or JSON text.
#[pyfunction]
fn run_experiment<'py>(py: Python<'py>, config: &str) -> PyResult<Bound<'py, PyAny>> {
    let cfg = ExperimentConfig::parse(config).map_err(err)?;
    let r = py
        .detach(|| experiments::run_experiment(&cfg))
        .map_err(err)?;
    to_py(py, &r)
}

#[pymodule]
#[pyo3(name = "mixlab")]
fn mixlab_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGraph>()?;
    m.add_function(wrap_pyfunction!(gnp, m)?)?;
    m.add_function(wrap_pyfunction!(perturb, m)?)?;
    m.add_function(wrap_pyfunction!(newman_watts, m)?)?;
    m.add_function(wrap_pyfunction!(percolate, m)?)?;
    m.add_function(wrap_pyfunction!(path_graph, m)?)?;
    m.add_function(wrap_pyfunction!(cycle_graph, m)?)?;
    m.add_function(wrap_pyfunction!(complete_graph, m)?)?;
    m.add_function(wrap_pyfunction!(star_graph, m)?)?;
    m.add_function(wrap_pyfunction!(stationary, m)?)?;
    m.add_function(wrap_pyfunction!(mixing_time, m)?)?;
    m.add_function(wrap_pyfunction!(avg_mixing_time, m)?)?;
    m.add_function(wrap_pyfunction!(tv_distance, m)?)?;
    m.add_function(wrap_pyfunction!(conductance, m)?)?;
    m.add_function(wrap_pyfunction!(fr_bound, m)?)?;
    m.add_function(wrap_pyfunction!(spreader_check, m)?)?;
    m.add_function(wrap_pyfunction!(contract, m)?)?;
    m.add_function(wrap_pyfunction!(coupling_survival_check, m)?)?;
    m.add_function(wrap_pyfunction!(fvtl_report, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
