//! Seeded end-to-end experiments: build a model graph, run the requested
//! analyses, aggregate over seeds, and emit JSON records and CSV plot data.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::conductance::{fr_bound, ProfileMode, ProfileOptions};
use crate::contraction::{contract_components, contract_to_vertex, stationary_tv};
use crate::error::{input, Error, Result};
use crate::fvtl::{default_horizon, fvtl_reports, is_non_cut_vertex, FvtlOptions};
use crate::generators::{
    cycle_graph, degeneracy, gen_gnp, gen_newman_watts, path_graph, percolate_host, perturb,
    star_graph, HostSpec, Seed,
};
use crate::graph::{is_connected, largest_component, Adjacency, Graph, VertexSet};
use crate::spreader::{analyze, SpreaderParams, Verdict};
use crate::walk::{
    avg_mixing_time_with, ball_growth_lower_bound, mixing_time_with, MixingCurve, MixingOptions,
    MixingReport, StartSelection,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Model {
    /// A bounded-degeneracy base graph plus `G(n, ε/n)`.
    Perturbed,
    NewmanWatts,
    /// `p`-percolation of a regular host with `p = (1 + ε)/d`, restricted to
    /// the largest component.
    Percolated,
    /// Largest component of `G(n, (1 + ε)/n)`.
    GnpGiant,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaseGraph {
    Path,
    Cycle,
    Star,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Analysis {
    Mix,
    Avgmix,
    Spreader,
    ContractPipeline,
    Fvtl,
    Conductance,
    BallLower,
}

impl Analysis {
    pub fn name(self) -> &'static str {
        match self {
            Analysis::Mix => "mix",
            Analysis::Avgmix => "avgmix",
            Analysis::Spreader => "spreader",
            Analysis::ContractPipeline => "contract-pipeline",
            Analysis::Fvtl => "fvtl",
            Analysis::Conductance => "conductance",
            Analysis::BallLower => "ball-lower",
        }
    }
}

/// Horizon used by the first-visit analysis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Horizon {
    /// `⌈(ln n)^6⌉`.
    Log6,
    /// The measured worst-start mixing time of the graph.
    Tmix,
    Fixed(usize),
}

impl FromStr for Horizon {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "log6" => Ok(Horizon::Log6),
            "tmix" => Ok(Horizon::Tmix),
            _ => s.parse().map(Horizon::Fixed).map_err(|_| {
                Error::Input(format!("horizon {s:?}: expected log6, tmix or an integer"))
            }),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct ExperimentConfig {
    pub model: Model,
    pub sizes: Vec<usize>,
    pub seeds: Vec<u64>,
    pub analyses: Vec<Analysis>,
    pub eps: f64,
    pub base: BaseGraph,
    /// Band width for Newman–Watts.
    pub k: usize,
    /// Host template for percolation, e.g. `random-regular:d=6`; `n` is
    /// filled in from `sizes`.
    pub host: String,
    pub restrict_to_largest_component: bool,
    pub mix_eps: f64,
    pub t_cap: Option<usize>,
    /// Every start is evolved when `n` is at most this.
    pub exact_limit: usize,
    /// Starts for the sampled average above `exact_limit`.
    pub samples: usize,
    /// Candidate starts for the worst-start search above `exact_limit`.
    pub worst_starts: usize,
    pub alpha: Option<f64>,
    #[serde(rename = "D")]
    pub d: Option<f64>,
    /// Constant in the default `α` for percolated models.
    pub alpha_c0: f64,
    pub k_cap: Option<usize>,
    pub c0: f64,
    pub conductance_budget: usize,
    pub fvtl_vertices: usize,
    pub fvtl_horizon: Horizon,
    pub out_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            model: Model::Perturbed,
            sizes: vec![1 << 11, 1 << 13, 1 << 15],
            seeds: vec![1, 2, 3],
            analyses: vec![],
            eps: 1.0,
            base: BaseGraph::Path,
            k: 1,
            host: "random-regular:d=6".into(),
            restrict_to_largest_component: false,
            mix_eps: 0.25,
            t_cap: None,
            exact_limit: 2048,
            samples: 256,
            worst_starts: 48,
            alpha: None,
            d: None,
            alpha_c0: 1.0,
            k_cap: None,
            c0: 1.0,
            conductance_budget: 64,
            fvtl_vertices: 10,
            fvtl_horizon: Horizon::Log6,
            out_dir: None,
        }
    }
}

const LIST_KEYS: [&str; 3] = ["sizes", "seeds", "analyses"];

impl ExperimentConfig {
    /// Parses either a JSON object or flat `key = value` lines (`#`
    /// comments, comma-separated lists).
    pub fn parse(text: &str) -> Result<ExperimentConfig> {
        let trimmed = text.trim_start();
        let value = if trimmed.starts_with('{') {
            serde_json::from_str::<Value>(text)?
        } else {
            let mut map = serde_json::Map::new();
            for (i, line) in text.lines().enumerate() {
                let line = line.split('#').next().unwrap().trim();
                if line.is_empty() {
                    continue;
                }
                let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
                    line: i + 1,
                    msg: "expected key = value".into(),
                })?;
                let (k, v) = (k.trim(), v.trim());
                let parsed = if LIST_KEYS.contains(&k) {
                    Value::Array(
                        v.split(',')
                            .map(str::trim)
                            .filter(|x| !x.is_empty())
                            .map(scalar)
                            .collect(),
                    )
                } else {
                    scalar(v)
                };
                if map.insert(k.to_string(), parsed).is_some() {
                    return Err(Error::Parse {
                        line: i + 1,
                        msg: format!("duplicate key {k}"),
                    });
                }
            }
            Value::Object(map)
        };
        let cfg: ExperimentConfig = serde_json::from_value(normalize(value))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return input("seed list is empty");
        }
        if self.sizes.is_empty() {
            return input("size list is empty");
        }
        if !(self.eps > 0.0) {
            return input("eps must be positive");
        }
        if !(self.mix_eps > 0.0 && self.mix_eps < 1.0) {
            return input("mix-eps must lie in (0, 1)");
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let canon = serde_json::to_string(self).expect("config serializes");
        format!("{:x}", Sha256::digest(canon.as_bytes()))
    }

    fn largest_only(&self) -> bool {
        self.restrict_to_largest_component
            || matches!(self.model, Model::Percolated | Model::GnpGiant)
    }
}

fn scalar(v: &str) -> Value {
    serde_json::from_str::<Value>(v).unwrap_or_else(|_| Value::String(v.to_string()))
}

/// Accepts `fvtl-horizon` given as a bare number or string in either format.
fn normalize(mut v: Value) -> Value {
    if let Some(h) = v.get_mut("fvtl-horizon") {
        let s = match h {
            Value::Number(x) => x.to_string(),
            Value::String(s) => s.clone(),
            _ => return v,
        };
        *h = match s.parse::<Horizon>() {
            Ok(Horizon::Fixed(t)) => json!({ "fixed": t }),
            Ok(Horizon::Log6) => json!("log6"),
            Ok(Horizon::Tmix) => json!("tmix"),
            Err(_) => Value::String(s),
        };
    }
    v
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphStats {
    /// Order of the generated graph before any restriction.
    pub generated_order: usize,
    pub order: usize,
    pub size: usize,
    pub max_degree: usize,
    pub degeneracy: usize,
    /// `ℓ_1/n` when the analysis runs on the largest component.
    pub l1_fraction: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Skip {
    pub n: usize,
    pub seed: u64,
    pub analysis: Analysis,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub n: usize,
    pub seed: u64,
    pub graph: GraphStats,
    pub metrics: BTreeMap<String, f64>,
    pub details: BTreeMap<String, Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub curve: Option<MixingCurve>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub median: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub config_hash: String,
    pub version: String,
    pub config: ExperimentConfig,
    pub runs: Vec<RunRecord>,
    /// `n` → metric → summary over seeds.
    pub aggregate: BTreeMap<usize, BTreeMap<String, Summary>>,
    pub skipped: Vec<Skip>,
    pub wall_clock_s: f64,
}

impl ResultRecord {
    /// JSON without the wall-clock field, for reproducibility checks.
    pub fn to_json_without_timing(&self) -> Value {
        let mut v = serde_json::to_value(self).expect("record serializes");
        v.as_object_mut().unwrap().remove("wall_clock_s");
        v
    }
}

pub fn median(xs: &mut [f64]) -> f64 {
    xs.sort_by(f64::total_cmp);
    let k = xs.len();
    if k == 0 {
        f64::NAN
    } else if k % 2 == 1 {
        xs[k / 2]
    } else {
        0.5 * (xs[k / 2 - 1] + xs[k / 2])
    }
}

/// Builds the model graph for one `(n, seed)` and returns it with the
/// statistics of the graph actually analysed.
pub fn build_model(cfg: &ExperimentConfig, n: usize, seed: u64) -> Result<(Graph, GraphStats)> {
    let s = Seed::new(seed).with_stream(n as u64);
    let g = match cfg.model {
        Model::Perturbed => {
            let base = match cfg.base {
                BaseGraph::Path => path_graph(n),
                BaseGraph::Cycle => cycle_graph(n)?,
                BaseGraph::Star => star_graph(n.saturating_sub(1)),
            };
            perturb(&base, cfg.eps, s)?
        }
        Model::NewmanWatts => gen_newman_watts(n, cfg.k, cfg.eps, s)?,
        Model::GnpGiant => gen_gnp(n, (1.0 + cfg.eps) / n as f64, s)?,
        Model::Percolated => {
            let host = host_spec(&cfg.host, n)?;
            let d = host
                .regular_degree()
                .ok_or_else(|| Error::Input("percolation host must be regular".into()))?;
            percolate_host(
                &host,
                (1.0 + cfg.eps) / d as f64,
                s.with_stream(s.stream + (1 << 32)),
                s,
            )?
        }
    };
    let generated_order = g.order();
    let (g, l1) = if cfg.largest_only() {
        let (c, _) = largest_component(&g);
        let frac = c.len() as f64 / generated_order as f64;
        (g.induced_subgraph(&c)?.0, Some(frac))
    } else {
        (g, None)
    };
    let stats = GraphStats {
        generated_order,
        order: g.order(),
        size: g.size(),
        max_degree: g.max_degree(),
        degeneracy: degeneracy(&g).value,
        l1_fraction: l1,
    };
    Ok((g, stats))
}

fn host_spec(template: &str, n: usize) -> Result<HostSpec> {
    if template.starts_with("file:") {
        return template.parse();
    }
    let (kind, rest) = template.split_once(':').unwrap_or((template, ""));
    let sep = if rest.is_empty() { "" } else { "," };
    format!("{kind}:n={n}{sep}{rest}").parse()
}

/// Default `(α, D)` for a model: for perturbed graphs `D = 2(Δ + 1 + ε)`
/// with `Δ` the degeneracy of the base and `α = min(0.01, ε/2D²)`; for
/// percolated ones `D = 12` and `α = c0·ε²/(D²·max(1, ln(1/ε)))`.
pub fn default_spreader_params(cfg: &ExperimentConfig) -> (f64, f64) {
    let eps = cfg.eps;
    let (alpha, d) = match cfg.model {
        Model::Perturbed | Model::NewmanWatts => {
            let delta = match (cfg.model, cfg.base) {
                (Model::NewmanWatts, _) => 2 * cfg.k,
                (_, BaseGraph::Cycle) => 2,
                _ => 1,
            } as f64;
            let d = 2.0 * (delta + 1.0 + eps);
            ((eps / (2.0 * d * d)).min(0.01), d)
        }
        Model::Percolated | Model::GnpGiant => {
            let d = 12.0;
            let log = (1.0 / eps).ln().max(1.0);
            (cfg.alpha_c0 * eps * eps / (d * d * log), d)
        }
    };
    (cfg.alpha.unwrap_or(alpha), cfg.d.unwrap_or(d))
}

/// Result of the contraction pipeline on one graph.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineRecord {
    pub params: SpreaderParams,
    pub u_size: usize,
    pub u_pi: f64,
    pub blocks: usize,
    /// `U` is exact only up to this set size.
    pub k_max_checked: usize,
    pub u_partial: bool,
    pub e_g: usize,
    pub e_gstar: usize,
    pub e_ghat: Option<usize>,
    pub ustar_independent: bool,
    /// Absent when `G*` has no edges.
    pub stationary_tv: Option<f64>,
    /// `e^{−(ln n)^{1/12}}`.
    pub tv_reference: f64,
    /// Smallest conductance among the sets examined in `G*`.
    pub gstar_min_phi: Option<f64>,
    /// `α²/8` and `α²/16`.
    pub phi_reference: (f64, f64),
    pub gstar_t_mix: Option<MixingReport>,
}

/// `U(α, D)` → `G*` → `Ĝ`, with the stationary comparison, a sampled
/// conductance profile of `G*` and its worst-start mixing time.
pub fn contract_pipeline(
    g: &Graph,
    params: &SpreaderParams,
    k_cap: Option<usize>,
    mixing: &MixingOptions,
    profile_budget: usize,
    seed: Seed,
) -> Result<PipelineRecord> {
    if !is_connected(g) {
        return Err(Error::Domain("pipeline needs a connected graph".into()));
    }
    let n = g.order();
    let (_, bad) = analyze(g, params, k_cap)?;
    let pair = contract_components(g, &bad.u)?;
    let gs = &pair.gstar;
    let ustar_independent = pair
        .ustar
        .iter()
        .all(|u| gs.neighbors(u).all(|(v, _)| !pair.ustar.contains(v)));
    let hat = if pair.ustar.is_empty() || !ustar_independent {
        None
    } else {
        Some(contract_to_vertex(&pair)?)
    };
    let tv = if gs.size() > 0 {
        Some(stationary_tv(g, gs, &pair.map)?)
    } else {
        None
    };
    let ln_n = (n as f64).ln();
    let opts = ProfileOptions {
        mode: if gs.order() <= 30 {
            ProfileMode::Exact
        } else {
            ProfileMode::Sampled
        },
        budget: profile_budget,
        seed,
        ..Default::default()
    };
    let gstar_min_phi = if gs.order() >= 2 && gs.size() > 0 {
        let prof = crate::conductance::conductance_profile(gs, &opts)?;
        prof.levels
            .iter()
            .filter(|l| l.witness.is_some())
            .map(|l| l.phi)
            .reduce(f64::min)
    } else {
        None
    };
    let gstar_t_mix = if gs.order() >= 2 && gs.size() > 0 {
        Some(mixing_time_with(gs, &mixing_for(gs.order(), mixing))?)
    } else {
        None
    };
    let a2 = params.alpha * params.alpha;
    Ok(PipelineRecord {
        params: params.clone(),
        u_size: bad.stats.size,
        u_pi: bad.stats.pi,
        blocks: bad.blocks.len(),
        k_max_checked: bad.k_max_checked,
        u_partial: !bad.complete,
        e_g: g.size(),
        e_gstar: gs.size(),
        e_ghat: hat.as_ref().map(|h| h.graph.size()),
        ustar_independent,
        stationary_tv: tv,
        tv_reference: (-ln_n.powf(1.0 / 12.0)).exp(),
        gstar_min_phi,
        phi_reference: (a2 / 8.0, a2 / 16.0),
        gstar_t_mix,
    })
}

/// Keeps the caller's eps/cap but picks exact starts on small graphs.
fn mixing_for(n: usize, base: &MixingOptions) -> MixingOptions {
    let mut o = base.clone();
    if let StartSelection::Candidates { count, .. } | StartSelection::Sampled { count, .. } =
        o.starts
    {
        if count >= n {
            o.starts = StartSelection::All;
        }
    }
    o
}

struct RunContext<'a> {
    cfg: &'a ExperimentConfig,
    g: &'a Graph,
    n: usize,
    seed: u64,
    t_mix: Option<usize>,
    metrics: BTreeMap<String, f64>,
    details: BTreeMap<String, Value>,
    curve: Option<MixingCurve>,
}

impl RunContext<'_> {
    fn seed_for(&self, a: Analysis) -> Seed {
        Seed::new(self.seed).with_stream(((a as u64) + 1) << 40 | self.n as u64)
    }

    fn worst_options(&self) -> MixingOptions {
        let n = self.g.order();
        MixingOptions {
            eps: self.cfg.mix_eps,
            t_cap: self.cfg.t_cap,
            starts: if n <= self.cfg.exact_limit {
                StartSelection::All
            } else {
                StartSelection::Candidates {
                    count: self.cfg.worst_starts,
                    seed: self.seed_for(Analysis::Mix),
                }
            },
            curve: false,
        }
    }

    fn metric(&mut self, k: &str, v: f64) {
        self.metrics.insert(k.to_string(), v);
    }

    fn ensure_t_mix(&mut self) -> Result<usize> {
        if let Some(t) = self.t_mix {
            return Ok(t);
        }
        let r = mixing_time_with(self.g, &self.worst_options())?;
        let t = r.t.ok_or(Error::Cap {
            what: "worst-start mixing time",
            cap: r.t_cap,
        })?;
        self.t_mix = Some(t);
        Ok(t)
    }

    fn run(&mut self, a: Analysis) -> Result<()> {
        let g = self.g;
        let n = g.order();
        let ln_n = (n as f64).ln();
        match a {
            Analysis::Mix => {
                let r = mixing_time_with(g, &self.worst_options())?;
                self.metric("t_mix_rigorous", f64::from(u8::from(r.rigorous)));
                if let Some(t) = r.t {
                    self.t_mix = Some(t);
                    self.metric("t_mix", t as f64);
                    self.metric("t_mix_over_log2_n", t as f64 / (ln_n * ln_n));
                }
                self.details.insert("mix".into(), serde_json::to_value(&r)?);
                if r.t.is_none() {
                    return Err(Error::Cap {
                        what: "worst-start mixing time",
                        cap: r.t_cap,
                    });
                }
            }
            Analysis::Avgmix => {
                let opts = MixingOptions {
                    eps: self.cfg.mix_eps,
                    t_cap: self.cfg.t_cap,
                    starts: if n <= self.cfg.exact_limit {
                        StartSelection::All
                    } else {
                        StartSelection::Sampled {
                            count: self.cfg.samples,
                            seed: self.seed_for(Analysis::Avgmix),
                        }
                    },
                    curve: true,
                };
                let mut r = avg_mixing_time_with(g, &opts)?;
                self.curve = r.curve.take();
                self.details
                    .insert("avgmix".into(), serde_json::to_value(&r)?);
                let t = r.t.ok_or(Error::Cap {
                    what: "average mixing time",
                    cap: r.t_cap,
                })?;
                self.metric("t_avg", t as f64);
                self.metric("t_avg_over_log_n", t as f64 / ln_n);
                if let Some(w) = self.t_mix {
                    self.metric("mix_ratio", w as f64 / t as f64);
                }
            }
            Analysis::BallLower => {
                let dbar = (2.0 * g.size() as f64 / n as f64).max(1.0);
                let k = ball_growth_lower_bound(g, dbar)?;
                self.metric("ball_lower", k as f64);
                self.metric("ball_lower_over_log2_n", k as f64 / (n as f64).log2());
            }
            Analysis::Conductance => {
                let opts = ProfileOptions {
                    mode: if n <= 30 {
                        ProfileMode::Exact
                    } else {
                        ProfileMode::Sampled
                    },
                    budget: self.cfg.conductance_budget,
                    seed: self.seed_for(a),
                    ..Default::default()
                };
                let r = fr_bound(g, self.cfg.c0, &opts)?;
                self.metric("fr_sum", r.fr_sum);
                self.metric("fr_bound", r.bound);
                let min_phi = r.levels.iter().map(|l| l.phi).fold(1.0, f64::min);
                self.metric("min_phi", min_phi);
                self.details
                    .insert("conductance".into(), serde_json::to_value(&r)?);
            }
            Analysis::Spreader => {
                let (alpha, d) = default_spreader_params(self.cfg);
                let params = SpreaderParams::new(alpha, d, n)?;
                let (cert, bad) = analyze(g, &params, self.cfg.k_cap)?;
                let code = |v: Verdict| match v {
                    Verdict::Pass => 1.0,
                    Verdict::Partial => 0.5,
                    Verdict::Inconclusive => 0.25,
                    Verdict::Fail => 0.0,
                };
                self.metric("s1", code(cert.s1.verdict));
                self.metric("s2", code(cert.s2.verdict));
                self.metric("s3", code(cert.s3.verdict));
                self.metric("u_size", bad.stats.size as f64);
                self.metric("u_pi", bad.stats.pi);
                self.details.insert(
                    "spreader".into(),
                    json!({ "certificate": cert, "bad_set": bad }),
                );
            }
            Analysis::ContractPipeline => {
                let (alpha, d) = default_spreader_params(self.cfg);
                let params = SpreaderParams::new(alpha, d, n)?;
                let mut mixing = self.worst_options();
                if let StartSelection::All = mixing.starts {
                    mixing.starts = StartSelection::Candidates {
                        count: self.cfg.worst_starts,
                        seed: self.seed_for(a),
                    };
                }
                let r = contract_pipeline(
                    g,
                    &params,
                    self.cfg.k_cap,
                    &mixing,
                    self.cfg.conductance_budget,
                    self.seed_for(a),
                )?;
                self.metric("pipeline_u_size", r.u_size as f64);
                if let Some(tv) = r.stationary_tv {
                    self.metric("pipeline_tv", tv);
                }
                if let Some(p) = r.gstar_min_phi {
                    self.metric("gstar_min_phi", p);
                }
                if let Some(t) = r.gstar_t_mix.as_ref().and_then(|m| m.t) {
                    self.metric("gstar_t_mix", t as f64);
                }
                self.details
                    .insert("contract-pipeline".into(), serde_json::to_value(&r)?);
                if r.gstar_t_mix.as_ref().is_some_and(|m| m.t.is_none()) {
                    return Err(Error::Cap {
                        what: "mixing time of the contracted graph",
                        cap: r.gstar_t_mix.as_ref().unwrap().t_cap,
                    });
                }
            }
            Analysis::Fvtl => {
                let t = match self.cfg.fvtl_horizon {
                    Horizon::Log6 => default_horizon(n),
                    Horizon::Fixed(t) => t,
                    Horizon::Tmix => self.ensure_t_mix()?,
                };
                let us = sample_non_cut_vertices(g, self.cfg.fvtl_vertices, self.seed_for(a))?;
                let opts = FvtlOptions {
                    t: Some(t),
                    seed: self.seed_for(a),
                    ..Default::default()
                };
                let reports = fvtl_reports(g, &us, &opts)?;
                let mut hit: Vec<f64> = reports.iter().map(|r| r.stat_hitting).collect();
                let mut prob: Vec<f64> = reports.iter().map(|r| r.stat_prob).collect();
                self.metric("fvtl_T", t as f64);
                self.metric("fvtl_stat_hitting_median", median(&mut hit));
                self.metric("fvtl_stat_prob_median", median(&mut prob));
                self.details
                    .insert("fvtl".into(), serde_json::to_value(&reports)?);
            }
        }
        Ok(())
    }
}

/// Up to `count` distinct vertices whose removal keeps the graph connected,
/// in a seeded random order.
pub fn sample_non_cut_vertices(g: &Graph, count: usize, seed: Seed) -> Result<VertexSet> {
    let mut order: Vec<usize> = (0..g.order()).collect();
    order.shuffle(&mut seed.rng());
    let picked: Vec<usize> = order
        .into_iter()
        .filter(|&u| g.degree(u) > 0 && is_non_cut_vertex(g, u))
        .take(count)
        .collect();
    if picked.is_empty() {
        return Err(Error::Domain("no non-cut vertex available".into()));
    }
    Ok(VertexSet::new(picked))
}

fn run_one(cfg: &ExperimentConfig, n: usize, seed: u64) -> (RunRecord, Vec<Skip>) {
    let mut skips = Vec::new();
    let (g, stats) = match build_model(cfg, n, seed) {
        Ok(x) => x,
        Err(e) => {
            let stats = GraphStats {
                generated_order: n,
                order: 0,
                size: 0,
                max_degree: 0,
                degeneracy: 0,
                l1_fraction: None,
            };
            skips.extend(cfg.analyses.iter().map(|&a| Skip {
                n,
                seed,
                analysis: a,
                reason: format!("model generation failed: {e}"),
            }));
            return (
                RunRecord {
                    n,
                    seed,
                    graph: stats,
                    metrics: BTreeMap::new(),
                    details: BTreeMap::new(),
                    curve: None,
                },
                skips,
            );
        }
    };
    let mut ctx = RunContext {
        cfg,
        g: &g,
        n,
        seed,
        t_mix: None,
        metrics: BTreeMap::new(),
        details: BTreeMap::new(),
        curve: None,
    };
    if let Some(f) = stats.l1_fraction {
        ctx.metric("l1_fraction", f);
    }
    for &a in &cfg.analyses {
        if let Err(e) = ctx.run(a) {
            skips.push(Skip {
                n,
                seed,
                analysis: a,
                reason: e.to_string(),
            });
        }
    }
    let RunContext {
        metrics,
        details,
        curve,
        ..
    } = ctx;
    (
        RunRecord {
            n,
            seed,
            graph: stats,
            metrics,
            details,
            curve,
        },
        skips,
    )
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ResultRecord> {
    cfg.validate()?;
    let start = std::time::Instant::now();
    let jobs: Vec<(usize, u64)> = cfg
        .sizes
        .iter()
        .flat_map(|&n| cfg.seeds.iter().map(move |&s| (n, s)))
        .collect();
    let results: Vec<(RunRecord, Vec<Skip>)> =
        jobs.par_iter().map(|&(n, s)| run_one(cfg, n, s)).collect();
    let mut runs = Vec::with_capacity(results.len());
    let mut skipped = Vec::new();
    for (r, s) in results {
        runs.push(r);
        skipped.extend(s);
    }
    let mut aggregate: BTreeMap<usize, BTreeMap<String, Summary>> = BTreeMap::new();
    for &n in &cfg.sizes {
        let mut by_metric: BTreeMap<String, Vec<f64>> = BTreeMap::new();
        for r in runs.iter().filter(|r| r.n == n) {
            for (k, &v) in &r.metrics {
                by_metric.entry(k.clone()).or_default().push(v);
            }
        }
        let summaries = by_metric
            .into_iter()
            .map(|(k, mut xs)| {
                let min = xs.iter().copied().fold(f64::INFINITY, f64::min);
                let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                (
                    k,
                    Summary {
                        median: median(&mut xs),
                        min,
                        max,
                    },
                )
            })
            .collect();
        aggregate.insert(n, summaries);
    }
    Ok(ResultRecord {
        config_hash: cfg.hash(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: cfg.clone(),
        runs,
        aggregate,
        skipped,
        wall_clock_s: start.elapsed().as_secs_f64(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlotKind {
    /// One `t,max_tv,mean_tv,sem` file per run.
    MixingCurve,
    /// One row per run, sorted by `n` then seed.
    SizeSweep,
}

pub const CURVE_HEADER: &str = "t,max_tv,mean_tv,sem";

pub fn curve_csv(c: &MixingCurve) -> String {
    let mut out = String::from(CURVE_HEADER);
    out.push('\n');
    for t in 0..c.len() {
        writeln!(out, "{t},{},{},{}", c.max_tv[t], c.mean_tv[t], c.sem[t]).unwrap();
    }
    out
}

pub fn parse_curve_csv(text: &str) -> Result<MixingCurve> {
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some(CURVE_HEADER) {
        return Err(Error::Parse {
            line: 1,
            msg: format!("expected header {CURVE_HEADER}"),
        });
    }
    let mut c = MixingCurve::default();
    for (i, l) in lines.enumerate() {
        let f: Vec<&str> = l.split(',').collect();
        let bad = |msg: String| Error::Parse { line: i + 2, msg };
        if f.len() != 4 {
            return Err(bad("expected 4 fields".into()));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|e| bad(e.to_string()));
        if f[0].parse::<usize>().ok() != Some(i) {
            return Err(bad("t column out of sequence".into()));
        }
        c.max_tv.push(num(f[1])?);
        c.mean_tv.push(num(f[2])?);
        c.sem.push(num(f[3])?);
    }
    Ok(c)
}

pub const SWEEP_COLUMNS: [&str; 7] = [
    "t_mix",
    "t_avg",
    "mix_ratio",
    "t_avg_over_log_n",
    "t_mix_over_log2_n",
    "ball_lower",
    "l1_fraction",
];

pub fn sweep_csv(record: &ResultRecord) -> String {
    let mut rows: Vec<&RunRecord> = record.runs.iter().collect();
    rows.sort_by_key(|r| (r.n, r.seed));
    let mut out = String::from("n,seed,log_n");
    for c in SWEEP_COLUMNS {
        out.push(',');
        out.push_str(c);
    }
    out.push('\n');
    for r in rows {
        write!(out, "{},{},{}", r.n, r.seed, (r.n as f64).ln()).unwrap();
        for c in SWEEP_COLUMNS {
            match r.metrics.get(c) {
                Some(v) => write!(out, ",{v}").unwrap(),
                None => out.push(','),
            }
        }
        out.push('\n');
    }
    out
}

/// Writes CSV plot data into `dir` and returns the files written.
pub fn emit_plot_data(record: &ResultRecord, kind: PlotKind, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    match kind {
        PlotKind::MixingCurve => {
            let with_curve: Vec<&RunRecord> =
                record.runs.iter().filter(|r| r.curve.is_some()).collect();
            if with_curve.is_empty() {
                let keys: Vec<String> = record
                    .runs
                    .first()
                    .map(|r| {
                        r.metrics
                            .keys()
                            .cloned()
                            .chain(r.details.keys().cloned())
                            .collect()
                    })
                    .unwrap_or_default();
                return Err(Error::Input(format!(
                    "record has no mixing curves (run the avgmix analysis); available keys: {}",
                    keys.join(", ")
                )));
            }
            let mut files = Vec::new();
            for r in with_curve {
                let p = dir.join(format!("curve_n{}_seed{}.csv", r.n, r.seed));
                std::fs::write(&p, curve_csv(r.curve.as_ref().unwrap()))?;
                files.push(p);
            }
            Ok(files)
        }
        PlotKind::SizeSweep => {
            let p = dir.join("sweep.csv");
            std::fs::write(&p, sweep_csv(record))?;
            Ok(vec![p])
        }
    }
}
