//! Command-line front end.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::baselines::{
    brute_force_optimum, degree_baseline, evaluate_sequence, exact_greedy, GreedyMode,
};
use crate::error::Error;
use crate::format::{self, INSTANCES_MAGIC, SKETCHES_MAGIC};
use crate::graph::{
    assign_uniform, assign_weighted_cascade, derive_seed, load_edge_list, sample_instances,
    IcModel, MultiInstanceGraph, NodeId,
};
use crate::ledger::ErrorLedger;
use crate::ranks::RankAssignment;
use crate::seeds::SeedSequence;
use crate::sketch::{build_sketches, SketchSet};
use crate::skim::{skim_run, SkimConfig};

pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 1;
pub const EXIT_DATA: u8 = 2;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Scheme {
    WeightedCascade,
    Uniform(f64),
}

impl FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "wc" {
            return Ok(Scheme::WeightedCascade);
        }
        let p = s
            .strip_prefix("un:")
            .ok_or_else(|| format!("unknown scheme {s:?}, expected wc or un:<p>"))?;
        let p: f64 = p
            .parse()
            .map_err(|_| format!("invalid probability {p:?}"))?;
        if !(0.0..=1.0).contains(&p) {
            return Err(format!("probability {p} outside [0, 1]"));
        }
        Ok(Scheme::Uniform(p))
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Scheme::WeightedCascade => write!(f, "wc"),
            Scheme::Uniform(p) => write!(f, "un:{p}"),
        }
    }
}

/// Seed count: a number or `all`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SeedCount {
    All,
    Count(usize),
}

impl FromStr for SeedCount {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "all" {
            Ok(SeedCount::All)
        } else {
            s.parse()
                .map(SeedCount::Count)
                .map_err(|_| format!("expected a seed count or \"all\", got {s:?}"))
        }
    }
}

impl std::fmt::Display for SeedCount {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SeedCount::All => write!(f, "all"),
            SeedCount::Count(c) => write!(f, "{c}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(
    name = "skim",
    version,
    about = "Sketch-based influence oracles and maximization"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample propagation instances from an edge list and write an instance file.
    Sample(RunConfig),
    /// Build combined reachability sketches and write a sketch file.
    Sketch(RunConfig),
    /// Sketch-based greedy seed selection.
    Skim(RunConfig),
    /// Exact greedy seed selection.
    Greedy(RunConfig),
    /// Seeds by decreasing out-degree.
    Degree(RunConfig),
    /// Estimate the influence of a seed set from sketches.
    Query(RunConfig),
    /// Exact influence of a given seed sequence.
    Eval(RunConfig),
    /// Exhaustive optimum for a small seed count.
    Optimum(RunConfig),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct RunConfig {
    /// Edge list, instance file (MIGR) or, for `query`, sketch file (CSKE).
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Treat each edge-list line as an undirected edge.
    #[arg(long)]
    pub undirected: bool,
    /// Probability scheme for edge-list input: wc or un:<p>.
    #[arg(long, default_value = "wc")]
    #[serde(serialize_with = "as_string")]
    pub scheme: Scheme,
    /// Number of propagation instances.
    #[arg(long, default_value_t = 64)]
    pub ell: u32,
    /// Sketch size.
    #[arg(long, default_value_t = 64)]
    pub k: u32,
    /// Number of seeds, or `all`.
    #[arg(long, default_value = "50")]
    #[serde(serialize_with = "as_string")]
    pub s: SeedCount,
    /// Random seed for sampling and ranks.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Add held-out influence evaluated on freshly sampled instances.
    #[arg(long)]
    pub eval: bool,
    /// Number of held-out instances.
    #[arg(long, default_value_t = 512)]
    pub eval_ell: u32,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: OutputFormat,
    /// Output path (stdout when omitted, except for binary outputs).
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Re-evaluate every candidate in every greedy round.
    #[arg(long)]
    pub naive_greedy: bool,
    /// Seed nodes for `query` and `eval`, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub nodes: Vec<u64>,
    /// Seed CSV (node column) for `eval`.
    #[arg(long)]
    pub seed_file: Option<PathBuf>,
    /// Also write the SKIM error ledger as JSON to this path.
    #[arg(long)]
    pub ledger: Option<PathBuf>,
    /// Run SKIM's in-run consistency checks (slow).
    #[arg(long)]
    pub verify: bool,
}

fn as_string<T: std::fmt::Display, S: serde::Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Data(e)
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Data(Error::Io(e))
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Data(e) => write!(f, "error: {e}"),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Data(_) => EXIT_DATA,
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Parsed input: instances plus, for edge-list input, the model they came
/// from and the input ids of the dense nodes.
struct Loaded {
    graph: MultiInstanceGraph,
    model: Option<IcModel>,
    labels: Option<Vec<u64>>,
}

impl Loaded {
    fn label(&self, v: NodeId) -> u64 {
        self.labels.as_ref().map_or(v as u64, |l| l[v as usize])
    }

    fn dense(&self, ids: &[u64]) -> CliResult<Vec<NodeId>> {
        let n = self.graph.node_count() as u64;
        let mut unknown = Vec::new();
        let out: Vec<NodeId> = ids
            .iter()
            .filter_map(|&id| {
                let v = match &self.labels {
                    Some(l) => l.binary_search(&id).ok().map(|v| v as NodeId),
                    None => (id < n).then_some(id as NodeId),
                };
                if v.is_none() {
                    unknown.push(id);
                }
                v
            })
            .collect();
        if unknown.is_empty() {
            Ok(out)
        } else {
            Err(Error::UnknownNodes(unknown).into())
        }
    }
}

enum Input {
    Graph(Loaded),
    Sketches(SketchSet),
}

fn build_model(cfg: &RunConfig, base: crate::graph::BaseGraph) -> CliResult<IcModel> {
    Ok(match cfg.scheme {
        Scheme::WeightedCascade => assign_weighted_cascade(base),
        Scheme::Uniform(p) => assign_uniform(base, p)?,
    })
}

fn read_input(cfg: &RunConfig) -> CliResult<Input> {
    let path = cfg
        .input
        .as_ref()
        .ok_or_else(|| usage("--input is required"))?;
    let bytes = fs::read(path).map_err(|e| {
        CliError::Data(Error::Io(io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        )))
    })?;
    if bytes.starts_with(INSTANCES_MAGIC) {
        let graph = format::read_instances(&bytes[..])?;
        return Ok(Input::Graph(Loaded {
            graph,
            model: None,
            labels: None,
        }));
    }
    if bytes.starts_with(SKETCHES_MAGIC) {
        return Ok(Input::Sketches(format::read_sketches(&bytes[..])?));
    }
    let base = load_edge_list(&bytes[..], !cfg.undirected)?;
    let labels = base.original_ids().map(<[u64]>::to_vec);
    let model = build_model(cfg, base)?;
    if cfg.ell == 0 {
        return Err(usage("--ell must be at least 1"));
    }
    let graph = sample_instances(&model, cfg.ell, cfg.seed)?;
    Ok(Input::Graph(Loaded {
        graph,
        model: Some(model),
        labels,
    }))
}

fn read_graph(cfg: &RunConfig) -> CliResult<Loaded> {
    match read_input(cfg)? {
        Input::Graph(g) => Ok(g),
        Input::Sketches(_) => Err(usage("this subcommand needs a graph, not a sketch file")),
    }
}

fn seed_count(cfg: &RunConfig, n: u32) -> CliResult<usize> {
    match cfg.s {
        SeedCount::All => Ok(n as usize),
        SeedCount::Count(c) if c <= n as usize => Ok(c),
        SeedCount::Count(c) => Err(usage(format!("--s {c} exceeds the node count {n}"))),
    }
}

fn open_output<'a>(cfg: &RunConfig, out: &'a mut dyn Write) -> CliResult<Box<dyn Write + 'a>> {
    Ok(match &cfg.output {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(out),
    })
}

fn required_output(cfg: &RunConfig, what: &str) -> CliResult<BufWriter<File>> {
    let p = cfg
        .output
        .as_ref()
        .ok_or_else(|| usage(format!("--output is required for {what} files")))?;
    Ok(BufWriter::new(File::create(p)?))
}

/// Held-out influence of every prefix of `seq`.
fn heldout_curve(cfg: &RunConfig, loaded: &Loaded, seq: &SeedSequence) -> CliResult<Vec<f64>> {
    let model = loaded
        .model
        .as_ref()
        .ok_or_else(|| usage("--eval needs an edge-list input so instances can be resampled"))?;
    if cfg.eval_ell == 0 {
        return Err(usage("--eval-ell must be at least 1"));
    }
    let heldout = sample_instances(model, cfg.eval_ell, derive_seed(cfg.seed, "eval"))?;
    let prefix = evaluate_sequence(&heldout, &seq.nodes())?;
    Ok((1..=seq.len())
        .map(|len| prefix.prefix_influence(len))
        .collect())
}

#[derive(Serialize)]
struct SeedRow {
    position: usize,
    node: u64,
    marginal: f64,
    cumulative: f64,
    marginal_num: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    influence_heldout: Option<f64>,
}

fn seed_rows(loaded: &Loaded, seq: &SeedSequence, heldout: Option<&[f64]>) -> Vec<SeedRow> {
    let mut cumulative = 0;
    seq.entries()
        .iter()
        .enumerate()
        .map(|(i, e)| {
            cumulative += e.covered;
            SeedRow {
                position: i + 1,
                node: loaded.label(e.node),
                marginal: e.covered as f64 / seq.instance_count() as f64,
                cumulative: cumulative as f64 / seq.instance_count() as f64,
                marginal_num: e.covered,
                influence_heldout: heldout.map(|h| h[i]),
            }
        })
        .collect()
}

fn envelope(command: &str, cfg: &RunConfig, g: &MultiInstanceGraph) -> serde_json::Value {
    json!({
        "tool": "skim",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "config": cfg,
        "graph": {
            "n": g.node_count(),
            "ell": g.instance_count(),
            "arcs": g.total_arcs(),
            "m": g.max_in_degree_sum(),
        },
    })
}

fn ledger_json(ledger: &ErrorLedger) -> serde_json::Value {
    json!({
        "records": ledger.records(),
        "curve": ledger.curve(),
    })
}

fn emit_seeds(
    command: &str,
    cfg: &RunConfig,
    loaded: &Loaded,
    seq: &SeedSequence,
    extra: Option<(&str, serde_json::Value)>,
    out: &mut dyn Write,
) -> CliResult<()> {
    let heldout = if cfg.eval {
        Some(heldout_curve(cfg, loaded, seq)?)
    } else {
        None
    };
    let mut w = open_output(cfg, out)?;
    match cfg.format {
        OutputFormat::Csv => seq.write_csv(&mut w, loaded.labels.as_deref(), heldout.as_deref())?,
        OutputFormat::Json => {
            let mut doc = envelope(command, cfg, &loaded.graph);
            doc["seeds"] = serde_json::to_value(seed_rows(loaded, seq, heldout.as_deref()))
                .expect("rows serialize");
            if let Some((key, value)) = extra {
                doc[key] = value;
            }
            serde_json::to_writer_pretty(&mut w, &doc).map_err(io::Error::from)?;
            writeln!(w)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn timing(label: &str, start: Instant) {
    eprintln!("{label}: {:.3} s", start.elapsed().as_secs_f64());
}

fn cmd_sample(cfg: &RunConfig) -> CliResult<()> {
    let loaded = read_graph(cfg)?;
    if loaded.model.is_none() {
        return Err(usage("sample needs an edge-list input"));
    }
    let w = required_output(cfg, "instance")?;
    format::write_instances(&loaded.graph, w)?;
    Ok(())
}

fn cmd_sketch(cfg: &RunConfig) -> CliResult<()> {
    let loaded = read_graph(cfg)?;
    let start = Instant::now();
    let set = sketches_for(cfg, &loaded.graph)?;
    timing("sketch build", start);
    let w = required_output(cfg, "sketch")?;
    format::write_sketches(&set, w)?;
    Ok(())
}

fn sketches_for(cfg: &RunConfig, g: &MultiInstanceGraph) -> CliResult<SketchSet> {
    if cfg.k == 0 {
        return Err(usage("--k must be at least 1"));
    }
    let ra = RankAssignment::new(g.node_count(), g.instance_count(), cfg.k, cfg.seed)?;
    Ok(build_sketches(g, &ra, cfg.k)?)
}

fn cmd_skim(cfg: &RunConfig, out: &mut dyn Write) -> CliResult<()> {
    let loaded = read_graph(cfg)?;
    let s = seed_count(cfg, loaded.graph.node_count())?;
    if cfg.k == 0 {
        return Err(usage("--k must be at least 1"));
    }
    let start = Instant::now();
    let mut config = SkimConfig::new(cfg.k, Some(s), cfg.seed);
    config.verify = cfg.verify;
    let run = skim_run(&loaded.graph, config)?;
    timing("skim", start);
    if cfg.verify && run.stats.violations > 0 {
        return Err(
            Error::domain(format!("{} in-run check violations", run.stats.violations)).into(),
        );
    }
    if let Some(path) = &cfg.ledger {
        let mut w = BufWriter::new(File::create(path)?);
        serde_json::to_writer_pretty(&mut w, &ledger_json(&run.ledger)).map_err(io::Error::from)?;
        writeln!(w)?;
        w.flush()?;
    }
    let extra = json!({ "ledger": ledger_json(&run.ledger), "stats": run.stats });
    emit_seeds("skim", cfg, &loaded, &run.seeds, Some(("skim", extra)), out)
}

fn cmd_greedy(cfg: &RunConfig, out: &mut dyn Write) -> CliResult<()> {
    let loaded = read_graph(cfg)?;
    let s = seed_count(cfg, loaded.graph.node_count())?;
    let mode = if cfg.naive_greedy {
        GreedyMode::Naive
    } else {
        GreedyMode::Lazy
    };
    let start = Instant::now();
    let seq = exact_greedy(&loaded.graph, s, mode)?;
    timing("greedy", start);
    emit_seeds("greedy", cfg, &loaded, &seq, None, out)
}

fn cmd_degree(cfg: &RunConfig, out: &mut dyn Write) -> CliResult<()> {
    let loaded = read_graph(cfg)?;
    let s = seed_count(cfg, loaded.graph.node_count())?;
    let seq = degree_baseline(&loaded.graph, s)?;
    emit_seeds("degree", cfg, &loaded, &seq, None, out)
}

fn cmd_optimum(cfg: &RunConfig, out: &mut dyn Write) -> CliResult<()> {
    let loaded = read_graph(cfg)?;
    let s = seed_count(cfg, loaded.graph.node_count())?;
    let (set, _) = brute_force_optimum(&loaded.graph, s)?;
    let seq = evaluate_sequence(&loaded.graph, &set)?;
    emit_seeds("optimum", cfg, &loaded, &seq, None, out)
}

fn read_seed_file(path: &Path) -> CliResult<Vec<u64>> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Format("empty seed file".into()))?;
    let col = header
        .split(',')
        .position(|h| h.trim() == "node")
        .ok_or_else(|| Error::Format("seed file has no node column".into()))?;
    lines
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.split(',')
                .nth(col)
                .and_then(|f| f.trim().parse().ok())
                .ok_or_else(|| {
                    CliError::Data(Error::Parse {
                        line: i + 2,
                        message: "invalid node".into(),
                    })
                })
        })
        .collect()
}

fn seed_nodes(cfg: &RunConfig) -> CliResult<Vec<u64>> {
    let mut ids = cfg.nodes.clone();
    if let Some(path) = &cfg.seed_file {
        ids.extend(read_seed_file(path)?);
    }
    if ids.is_empty() {
        return Err(usage("give seed nodes with --nodes or --seed-file"));
    }
    Ok(ids)
}

fn cmd_eval(cfg: &RunConfig, out: &mut dyn Write) -> CliResult<()> {
    let loaded = read_graph(cfg)?;
    let nodes = loaded.dense(&seed_nodes(cfg)?)?;
    let seq = evaluate_sequence(&loaded.graph, &nodes)?;
    emit_seeds("eval", cfg, &loaded, &seq, None, out)
}

fn cmd_query(cfg: &RunConfig, out: &mut dyn Write) -> CliResult<()> {
    let ids = seed_nodes(cfg)?;
    let (set, nodes, meta) = match read_input(cfg)? {
        Input::Sketches(set) => {
            let nodes = ids.iter().map(|&id| id as NodeId).collect::<Vec<_>>();
            let unknown: Vec<u64> = ids
                .iter()
                .copied()
                .filter(|&id| id >= set.node_count() as u64)
                .collect();
            if !unknown.is_empty() {
                return Err(Error::UnknownNodes(unknown).into());
            }
            let meta = json!({ "n": set.node_count(), "ell": set.instance_count() });
            (set, nodes, meta)
        }
        Input::Graph(loaded) => {
            let nodes = loaded.dense(&ids)?;
            let start = Instant::now();
            let set = sketches_for(cfg, &loaded.graph)?;
            timing("sketch build", start);
            let g = &loaded.graph;
            let meta = json!({
                "n": g.node_count(),
                "ell": g.instance_count(),
                "arcs": g.total_arcs(),
                "m": g.max_in_degree_sum(),
            });
            (set, nodes, meta)
        }
    };
    let start = Instant::now();
    let estimate = set.query(&nodes)?;
    timing("query", start);
    let mut w = open_output(cfg, out)?;
    match cfg.format {
        OutputFormat::Csv => {
            writeln!(w, "seeds,estimate")?;
            writeln!(w, "{},{}", nodes.len(), estimate)?;
        }
        OutputFormat::Json => {
            let doc = json!({
                "tool": "skim",
                "version": env!("CARGO_PKG_VERSION"),
                "command": "query",
                "config": cfg,
                "graph": meta,
                "k": set.k(),
                "nodes": ids,
                "estimate": estimate,
            });
            serde_json::to_writer_pretty(&mut w, &doc).map_err(io::Error::from)?;
            writeln!(w)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Runs one parsed command, writing textual results to `out`.
pub fn execute(cli: &Cli, out: &mut dyn Write) -> CliResult<()> {
    match &cli.command {
        Command::Sample(c) => cmd_sample(c),
        Command::Sketch(c) => cmd_sketch(c),
        Command::Skim(c) => cmd_skim(c, out),
        Command::Greedy(c) => cmd_greedy(c, out),
        Command::Degree(c) => cmd_degree(c, out),
        Command::Query(c) => cmd_query(c, out),
        Command::Eval(c) => cmd_eval(c, out),
        Command::Optimum(c) => cmd_optimum(c, out),
    }
}

/// Parses `args` (including the program name) and runs; returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(&cli, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}
