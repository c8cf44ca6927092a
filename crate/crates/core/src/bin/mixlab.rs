use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use mixlab::conductance::{fr_bound, ProfileMode, ProfileOptions};
use mixlab::contraction::{contract_components, contract_to_vertex, stationary_tv};
use mixlab::experiments::{
    curve_csv, emit_plot_data, run_experiment, sample_non_cut_vertices, ExperimentConfig, PlotKind,
};
use mixlab::fvtl::{fvtl_report, fvtl_reports, FvtlOptions};
use mixlab::generators::{
    cycle_graph, gen_gnp, gen_newman_watts, path_graph, percolate_host, perturb, star_graph,
    HostSpec, Seed,
};
use mixlab::graph::{is_connected, largest_component};
use mixlab::io::{format_graph, format_multigraph, parse_vertex_list, read_graph};
use mixlab::spreader::{analyze, SpreaderParams};
use mixlab::walk::{avg_mixing_time_with, mixing_time_with, MixingOptions, StartSelection};
use mixlab::{Adjacency, Error, Graph, Result, VertexSet};

#[derive(Parser)]
#[command(
    name = "mixlab",
    version,
    about = "Mixing times and bottlenecks of lazy random walks"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a graph and print it as an edge list.
    Gen(GenArgs),
    /// Worst-start mixing time.
    Mix(MixArgs),
    /// Average-start mixing time.
    Avgmix(MixArgs),
    /// Conductance profile and the resulting mixing bound.
    Conductance(ConductanceArgs),
    /// Check the spreader conditions and compute the bad-set union.
    Spreader(SpreaderArgs),
    /// Contract the bad-set components and the contracted set.
    Contract(ContractArgs),
    /// First-visit diagnostics at one or more vertices.
    Fvtl(FvtlArgs),
    /// Run an experiment config.
    Run(RunArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum GenModel {
    Gnp,
    Perturbed,
    NewmanWatts,
    Percolated,
    Host,
}

#[derive(Clone, Copy, ValueEnum)]
enum Base {
    Path,
    Cycle,
    Star,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_enum)]
    model: GenModel,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    eps: f64,
    #[arg(long, default_value_t = 1)]
    k: usize,
    #[arg(long, value_enum, default_value_t = Base::Path)]
    base: Base,
    /// e.g. `random-regular:n=100,d=6`.
    #[arg(long)]
    host: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Exact,
    Sampled,
}

#[derive(Args)]
struct GraphArg {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    restrict_to_largest_component: bool,
}

#[derive(Args)]
struct MixArgs {
    #[command(flatten)]
    graph: GraphArg,
    #[arg(long, default_value_t = 0.25)]
    eps: f64,
    #[arg(long, value_enum, default_value_t = Mode::Exact)]
    mode: Mode,
    #[arg(long, default_value_t = 256)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    t_cap: Option<usize>,
    #[arg(long)]
    curve_out: Option<PathBuf>,
    #[arg(long)]
    json_out: Option<PathBuf>,
}

#[derive(Args)]
struct ConductanceArgs {
    #[command(flatten)]
    graph: GraphArg,
    #[arg(long, value_enum, default_value_t = Mode::Exact)]
    mode: Mode,
    #[arg(long, default_value_t = 64)]
    budget: usize,
    #[arg(long, default_value_t = 1.0)]
    c0: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    json_out: Option<PathBuf>,
}

#[derive(Args)]
struct SpreaderOpts {
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long = "D")]
    d: Option<f64>,
    #[arg(long)]
    k_cap: Option<usize>,
    /// Lower end of the size window.
    #[arg(long)]
    k_lo: Option<usize>,
    #[arg(long)]
    k_hi: Option<usize>,
}

impl SpreaderOpts {
    fn params(&self, n: usize) -> Result<SpreaderParams> {
        let (Some(alpha), Some(d)) = (self.alpha, self.d) else {
            return Err(Error::Input("--alpha and --D are required".into()));
        };
        let p = SpreaderParams::new(alpha, d, n)?;
        if self.k_lo.is_some() || self.k_hi.is_some() {
            let (lo, hi) = (self.k_lo.unwrap_or(p.k_lo), self.k_hi.unwrap_or(p.k_hi));
            return p.with_window(lo, hi);
        }
        Ok(p)
    }
}

#[derive(Args)]
struct SpreaderArgs {
    #[command(flatten)]
    graph: GraphArg,
    #[command(flatten)]
    opts: SpreaderOpts,
    #[arg(long)]
    json_out: Option<PathBuf>,
}

#[derive(Args)]
struct ContractArgs {
    #[command(flatten)]
    graph: GraphArg,
    #[arg(long, conflicts_with = "from_spreader")]
    u_file: Option<PathBuf>,
    #[arg(long)]
    from_spreader: bool,
    #[command(flatten)]
    opts: SpreaderOpts,
    #[arg(long)]
    emit_gstar: Option<PathBuf>,
    #[arg(long)]
    emit_ghat: Option<PathBuf>,
    #[arg(long)]
    json_out: Option<PathBuf>,
}

#[derive(Args)]
struct FvtlArgs {
    #[command(flatten)]
    graph: GraphArg,
    #[arg(long, conflicts_with = "sample")]
    u: Option<usize>,
    /// Number of random non-cut vertices.
    #[arg(long)]
    sample: Option<usize>,
    #[arg(long = "T")]
    t: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    json_out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    allow_skip: bool,
}

fn load(arg: &GraphArg) -> Result<Graph> {
    let g = read_graph(&arg.graph)?;
    if arg.restrict_to_largest_component {
        let (c, _) = largest_component(&g);
        return Ok(g.induced_subgraph(&c)?.0);
    }
    Ok(g)
}

fn require_connected(g: &Graph) -> Result<()> {
    if is_connected(g) {
        Ok(())
    } else {
        Err(Error::Domain(
            "graph is disconnected; pass --restrict-to-largest-component".into(),
        ))
    }
}

fn emit<T: Serialize>(value: &T, path: Option<&Path>) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn gen(a: &GenArgs) -> Result<Graph> {
    let seed = Seed::new(a.seed);
    let need_n = || a.n.ok_or_else(|| Error::Input("--n is required".into()));
    let host = || -> Result<HostSpec> {
        a.host
            .as_deref()
            .ok_or_else(|| Error::Input("--host is required".into()))?
            .parse()
    };
    match a.model {
        GenModel::Gnp => {
            let n = need_n()?;
            gen_gnp(n, a.p.unwrap_or((1.0 + a.eps) / n as f64), seed)
        }
        GenModel::Perturbed => {
            let n = need_n()?;
            let base = match a.base {
                Base::Path => path_graph(n),
                Base::Cycle => cycle_graph(n)?,
                Base::Star => star_graph(n.saturating_sub(1)),
            };
            perturb(&base, a.eps, seed)
        }
        GenModel::NewmanWatts => gen_newman_watts(need_n()?, a.k, a.eps, seed),
        GenModel::Percolated => {
            let h = host()?;
            let p = match (a.p, h.regular_degree()) {
                (Some(p), _) => p,
                (None, Some(d)) => (1.0 + a.eps) / d as f64,
                (None, None) => {
                    return Err(Error::Input("--p is required for irregular hosts".into()))
                }
            };
            percolate_host(&h, p, seed.with_stream(1), seed)
        }
        GenModel::Host => host()?.build(seed),
    }
}

fn mix(a: &MixArgs, average: bool) -> Result<()> {
    let g = load(&a.graph)?;
    require_connected(&g)?;
    let seed = Seed::new(a.seed);
    let starts = match (a.mode, average) {
        (Mode::Exact, _) => StartSelection::All,
        (Mode::Sampled, true) => StartSelection::Sampled {
            count: a.samples,
            seed,
        },
        (Mode::Sampled, false) => StartSelection::Candidates {
            count: a.samples,
            seed,
        },
    };
    let opts = MixingOptions {
        eps: a.eps,
        t_cap: a.t_cap,
        starts,
        curve: a.curve_out.is_some(),
    };
    let mut r = if average {
        avg_mixing_time_with(&g, &opts)?
    } else {
        mixing_time_with(&g, &opts)?
    };
    if let (Some(p), Some(c)) = (&a.curve_out, r.curve.take()) {
        std::fs::write(p, curve_csv(&c))?;
    }
    emit(&r, a.json_out.as_deref())
}

fn conductance(a: &ConductanceArgs) -> Result<()> {
    let g = load(&a.graph)?;
    let opts = ProfileOptions {
        mode: match a.mode {
            Mode::Exact => ProfileMode::Exact,
            Mode::Sampled => ProfileMode::Sampled,
        },
        budget: a.budget,
        seed: Seed::new(a.seed),
        ..Default::default()
    };
    emit(&fr_bound(&g, a.c0, &opts)?, a.json_out.as_deref())
}

fn spreader(a: &SpreaderArgs) -> Result<()> {
    let g = load(&a.graph)?;
    let params = a.opts.params(g.order())?;
    let (cert, bad) = analyze(&g, &params, a.opts.k_cap)?;
    let out = json!({
        "params": cert.params,
        "s1": cert.s1,
        "s2": cert.s2,
        "s3": cert.s3,
        "U": bad.u,
        "blocks": bad.blocks,
        "stats": bad.stats,
        "k_max_checked": bad.k_max_checked,
        "complete": bad.complete,
    });
    emit(&out, a.json_out.as_deref())
}

fn contract(a: &ContractArgs) -> Result<()> {
    let g = load(&a.graph)?;
    let (u, partial) = match (&a.u_file, a.from_spreader) {
        (Some(p), false) => (
            VertexSet::within(g.order(), parse_vertex_list(&std::fs::read_to_string(p)?)?)?,
            false,
        ),
        (None, true) => {
            let (_, bad) = analyze(&g, &a.opts.params(g.order())?, a.opts.k_cap)?;
            (bad.u, !bad.complete)
        }
        _ => {
            return Err(Error::Input(
                "give exactly one of --u-file and --from-spreader".into(),
            ))
        }
    };
    let pair = contract_components(&g, &u)?;
    let gs = &pair.gstar;
    if let Some(p) = &a.emit_gstar {
        std::fs::write(p, format_multigraph(gs))?;
    }
    let hat = if pair.ustar.is_empty() {
        None
    } else {
        Some(contract_to_vertex(&pair)?)
    };
    match (&a.emit_ghat, &hat) {
        (Some(p), Some(h)) => std::fs::write(p, format_multigraph(&h.graph))?,
        (Some(_), None) => {
            return Err(Error::Domain(
                "U is empty, so there is nothing to merge".into(),
            ))
        }
        _ => {}
    }
    let tv = if gs.size() > 0 {
        Some(stationary_tv(&g, gs, &pair.map)?)
    } else {
        None
    };
    let out = json!({
        "n": g.order(),
        "m": g.size(),
        "u_size": u.len(),
        "u_partial": partial,
        "blocks": pair.map.blocks.len(),
        "gstar_order": gs.order(),
        "e_gstar": gs.size(),
        "ustar": pair.ustar,
        "ghat_order": hat.as_ref().map(|h| h.graph.order()),
        "e_ghat": hat.as_ref().map(|h| h.graph.size()),
        "stationary_tv": tv,
    });
    emit(&out, a.json_out.as_deref())
}

fn fvtl(a: &FvtlArgs) -> Result<()> {
    let g = load(&a.graph)?;
    require_connected(&g)?;
    let mut opts = FvtlOptions {
        t: a.t,
        seed: Seed::new(a.seed),
        ..Default::default()
    };
    if let Some(tol) = a.tol {
        opts.tol = tol;
    }
    match (a.u, a.sample) {
        (Some(u), None) => emit(&fvtl_report(&g, u, &opts)?, a.json_out.as_deref()),
        (None, Some(k)) => {
            let us = sample_non_cut_vertices(&g, k, Seed::new(a.seed).with_stream(1))?;
            emit(&fvtl_reports(&g, &us, &opts)?, a.json_out.as_deref())
        }
        _ => Err(Error::Input("give exactly one of --u and --sample".into())),
    }
}

fn run(a: &RunArgs) -> Result<bool> {
    let cfg = ExperimentConfig::parse(&std::fs::read_to_string(&a.config)?)?;
    let record = run_experiment(&cfg)?;
    let dir = a.out_dir.clone().or_else(|| cfg.out_dir.clone());
    match dir {
        Some(d) => {
            std::fs::create_dir_all(&d)?;
            emit(&record, Some(&d.join("result.json")))?;
            emit_plot_data(&record, PlotKind::SizeSweep, &d)?;
            if record.runs.iter().any(|r| r.curve.is_some()) {
                emit_plot_data(&record, PlotKind::MixingCurve, &d)?;
            }
        }
        None => emit(&record, None)?,
    }
    for s in &record.skipped {
        eprintln!(
            "skipped {} at n={} seed={}: {}",
            s.analysis.name(),
            s.n,
            s.seed,
            s.reason
        );
    }
    Ok(record.skipped.is_empty() || a.allow_skip)
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("MIXLAB_THREADS") {
        let n: usize = v
            .parse()
            .map_err(|_| Error::Input(format!("MIXLAB_THREADS={v:?} is not a number")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Input(e.to_string()))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| match &cli.cmd {
        Cmd::Gen(a) => gen(a)
            .and_then(|g| {
                let text = format_graph(&g);
                match &a.out {
                    Some(p) => std::fs::write(p, text).map_err(Error::from),
                    None => {
                        print!("{text}");
                        Ok(())
                    }
                }
            })
            .map(|()| true),
        Cmd::Mix(a) => mix(a, false).map(|()| true),
        Cmd::Avgmix(a) => mix(a, true).map(|()| true),
        Cmd::Conductance(a) => conductance(a).map(|()| true),
        Cmd::Spreader(a) => spreader(a).map(|()| true),
        Cmd::Contract(a) => contract(a).map(|()| true),
        Cmd::Fvtl(a) => fvtl(a).map(|()| true),
        Cmd::Run(a) => run(a),
    });
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
