//! `sccp`: generate core-periphery networks, analyze their structure, run
//! seeded cascades over them, and fit/validate the results.
//!
//! Exit codes: 0 success, 2 usage, 3 I/O, 4 violated precondition.
//!
//! Every stochastic subcommand takes an explicit `--seed` and writes data
//! files that are byte-identical across reruns. Output paths are taken
//! relative to `SCCP_OUT_DIR` when that variable is set.

use std::fmt;
use std::fs::{self, File};
use std::io::{BufReader, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use sccp_core::analysis::{
    fit_sigmoid, plateau_from_series, read_cumulative, write_aggregate, write_trace,
    AggregateTable, ExportFormat, PlateauReport, SigmoidFit, TraceTable,
};
use sccp_core::cascade::{
    infection_graph, monte_carlo, select_seeds, ProbabilityTable, SeedSpec, SeedStrategy,
    SimOptions,
};
use sccp_core::classify::{weight_report_partial, EdgeClass};
use sccp_core::config::ConfigMap;
use sccp_core::generate::{generate_er, generate_sccp, SccpParams};
use sccp_core::graph::{load_edge_list, write_edge_list, Loaded, LoadOptions, NodeIdMap};
use sccp_core::structure::{analyze, read_partition, write_partition, PartitionTable, Role};

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser)]
#[command(
    name = "sccp",
    version,
    about = "Core-periphery network synthesis, cascade simulation, and analysis"
)]
struct Cli {
    /// Suppress the run summary printed to stderr.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Synthesize a graph (writes edge list, partition sidecar, metadata).
    #[command(subcommand)]
    Generate(GenCmd),
    /// Compute coreness, communities, and roles for an existing graph.
    Analyze(AnalyzeArgs),
    /// Run seeded cascades and export traces or aggregates.
    Simulate(SimulateArgs),
    /// Fit a logistic curve (and optionally plateau structure) to a trace.
    Fit(FitArgs),
    /// Check the class-weight ordering of an interaction graph.
    Validate(ValidateArgs),
}

#[derive(Subcommand)]
enum GenCmd {
    /// Clique-seeded communities grown by preferential attachment, with the
    /// top-coreness nodes relabeled into a shared core community.
    Sccp(SccpArgs),
    /// Uniform random graph with an exact edge count.
    Er(ErArgs),
}

#[derive(Args)]
struct SccpArgs {
    /// key = value defaults for any flag below (flags win).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Number of seed communities.
    #[arg(long = "k", visible_alias = "communities", value_name = "K")]
    k: Option<usize>,
    /// Clique size of each seed community.
    #[arg(long = "s", visible_alias = "clique-size", value_name = "S")]
    s: Option<usize>,
    /// Nodes grown per community: one value for all, or one per community.
    #[arg(
        long = "t",
        visible_alias = "new-nodes",
        value_name = "T",
        value_delimiter = ','
    )]
    t: Option<Vec<usize>>,
    /// Fraction of each new node's edges kept inside its own community.
    #[arg(long = "f", visible_alias = "intra-fraction", value_name = "F")]
    f: Option<f64>,
    /// Degree range for new nodes: MIN MAX.
    #[arg(
        long = "r",
        visible_alias = "degree-range",
        num_args = 2,
        value_names = ["MIN", "MAX"]
    )]
    r: Option<Vec<usize>>,
    /// Fraction of nodes (by top coreness) relabeled as the core community.
    #[arg(long)]
    core_fraction: Option<f64>,
    /// Generator seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output path prefix.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ErArgs {
    /// Node count.
    #[arg(long = "n", value_name = "N")]
    n: usize,
    /// Exact edge count.
    #[arg(long = "m", value_name = "M")]
    m: usize,
    /// Generator seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output path prefix.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Edge-list file to analyze.
    #[arg(long, short)]
    input: PathBuf,
    /// Treat the edge list as directed.
    #[arg(long)]
    directed: bool,
    /// Require and use a third weight column.
    #[arg(long)]
    weighted: bool,
    /// Swap source and destination while loading.
    #[arg(long)]
    reverse: bool,
    /// Fraction of nodes (by top coreness) labeled core.
    #[arg(long, default_value_t = 0.1)]
    core_fraction: f64,
    /// Output path prefix (defaults to the input stem).
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
#[command(group(
    clap::ArgGroup::new("table").required(false).multiple(false)
))]
struct SimulateArgs {
    /// key = value defaults for any flag below (flags win).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Edge-list file of the graph to spread over.
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Partition sidecar (`node community coreness role`) for the graph.
    #[arg(long)]
    partition: Option<PathBuf>,
    /// Use the five built-in per-class transmission probabilities.
    #[arg(long = "ebh-paper", group = "table")]
    ebh_paper: bool,
    /// One probability for every edge class.
    #[arg(long, group = "table", value_name = "P")]
    uniform: Option<f64>,
    /// Explicit per-class probabilities: CC,CP,PC,PP0,PP1.
    #[arg(
        long,
        group = "table",
        value_delimiter = ',',
        num_args = 5,
        value_names = ["CC", "CP", "PC", "PP0", "PP1"]
    )]
    probs: Option<Vec<f64>>,
    /// Seed strategy: periphery:N | core:N | random:N | community:C:N |
    /// communities:C1+C2:N | nodes:A+B+C.
    #[arg(long, value_parser = SeedArg::from_str)]
    seeds: Option<SeedArg>,
    /// Number of Monte-Carlo trials.
    #[arg(long)]
    trials: Option<usize>,
    /// Hard iteration cap per trial.
    #[arg(long)]
    max_iters: Option<usize>,
    /// Stop a trial after this many consecutive empty iterations.
    #[arg(long)]
    patience: Option<usize>,
    /// Base RNG seed; trial i uses seed + i.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for trials (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
    /// Output format for traces and aggregates.
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Also write each individual trace when trials > 1.
    #[arg(long)]
    keep_traces: bool,
    /// Also write the who-infected-whom graph (transmission counts summed
    /// over trials) as a weighted directed edge list.
    #[arg(long)]
    write_infections: bool,
    /// Output path prefix.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FitArgs {
    /// Exported trace or aggregate file (CSV or JSON).
    #[arg(long, short)]
    input: PathBuf,
    /// Also report plateau structure with this post-ignition window
    /// (requires a JSON trace export, which carries core counts).
    #[arg(long, value_name = "W")]
    plateau_window: Option<usize>,
    /// Write the report here instead of stdout.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    /// Partition sidecar assigning roles and communities by node label.
    #[arg(long)]
    partition: PathBuf,
    /// Weighted interaction edge list (directed).
    #[arg(long)]
    interaction: PathBuf,
    /// Treat the interaction graph as undirected.
    #[arg(long)]
    undirected: bool,
    /// Skip interaction nodes missing from the partition instead of failing.
    #[arg(long)]
    allow_missing: bool,
    /// Write the report here instead of stdout.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

impl Format {
    fn export(self) -> ExportFormat {
        match self {
            Format::Csv => ExportFormat::Csv,
            Format::Json => ExportFormat::Json,
        }
    }

    fn ext(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

impl FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(format!("unknown format {other:?} (want csv or json)")),
        }
    }
}

/// Parsed `--seeds` argument; the RNG seed is attached later from `--seed`.
#[derive(Clone, Debug)]
struct SeedArg {
    strategy: SeedStrategy,
    count: usize,
    raw: String,
}

impl FromStr for SeedArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        fn num<T: FromStr>(tok: &str, what: &str) -> Result<T, String> {
            tok.parse()
                .map_err(|_| format!("invalid {what} {tok:?} in seed spec"))
        }
        let parts: Vec<&str> = s.split(':').collect();
        let (strategy, count) = match parts.as_slice() {
            ["periphery", n] => (SeedStrategy::RandomPeriphery, num(n, "count")?),
            ["core", n] => (SeedStrategy::RandomCore, num(n, "count")?),
            ["random", n] => (SeedStrategy::UniformRandom, num(n, "count")?),
            ["community", c, n] => (
                SeedStrategy::SingleCommunity(num(c, "community")?),
                num(n, "count")?,
            ),
            ["communities", cs, n] => {
                let labels = cs
                    .split('+')
                    .map(|c| num(c, "community"))
                    .collect::<Result<Vec<u32>, String>>()?;
                (SeedStrategy::MultiCommunity(labels), num(n, "count")?)
            }
            ["nodes", list] => {
                let nodes = list
                    .split('+')
                    .map(|v| num(v, "node id"))
                    .collect::<Result<Vec<usize>, String>>()?;
                let count = nodes.len();
                (SeedStrategy::Explicit(nodes), count)
            }
            _ => {
                return Err(format!(
                    "unrecognized seed spec {s:?}; expected periphery:N, core:N, random:N, \
                     community:C:N, communities:C1+C2:N, or nodes:A+B+C"
                ))
            }
        };
        Ok(SeedArg {
            strategy,
            count,
            raw: s.to_string(),
        })
    }
}

enum CliError {
    Usage(String),
    Io(String),
    Precondition(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io(_) => 3,
            CliError::Precondition(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Io(m) | CliError::Precondition(m) => f.write_str(m),
        }
    }
}

/// Classify a library error, prefixing it with what was being done.
fn ctx<T>(r: sccp_core::Result<T>, what: &str) -> Result<T, CliError> {
    r.map_err(|e| {
        let msg = format!("{what}: {e}");
        if e.is_io_like() {
            CliError::Io(msg)
        } else {
            CliError::Precondition(msg)
        }
    })
}

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn read_to_string(path: &Path) -> Result<String, CliError> {
    let mut text = String::new();
    open(path)?
        .read_to_string(&mut text)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok(text)
}

/// Resolve an output prefix: explicit or default stem, rooted at
/// SCCP_OUT_DIR unless absolute.
fn resolve_out(out: Option<PathBuf>, default_stem: &str) -> PathBuf {
    let base = out.unwrap_or_else(|| PathBuf::from(default_stem));
    if base.is_absolute() {
        return base;
    }
    match std::env::var_os("SCCP_OUT_DIR") {
        Some(dir) => PathBuf::from(dir).join(base),
        None => base,
    }
}

/// Same re-rooting for commands where omitting `--out` means stdout.
fn resolve_opt_out(out: Option<PathBuf>) -> Option<PathBuf> {
    out.map(|p| resolve_out(Some(p), ""))
}

/// All data files go through here: full content to a temp sibling, then a
/// rename, so readers never observe partial files.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let fail = |e: std::io::Error| CliError::Io(format!("{}: {e}", path.display()));
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(fail)?;
        }
    }
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let tmp = path.with_file_name(format!("{name}.tmp-{}", std::process::id()));
    fs::write(&tmp, bytes).map_err(fail)?;
    fs::rename(&tmp, path).map_err(fail)
}

fn write_json_atomic<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut buf = serde_json::to_vec_pretty(value)
        .map_err(|e| CliError::Precondition(format!("serializing {}: {e}", path.display())))?;
    buf.push(b'\n');
    write_atomic(path, &buf)
}

fn load_config(path: Option<&Path>) -> Result<ConfigMap, CliError> {
    match path {
        None => Ok(ConfigMap::default()),
        Some(p) => ctx(
            ConfigMap::parse(&read_to_string(p)?),
            &p.display().to_string(),
        ),
    }
}

/// Flag beats config beats nothing.
fn pick<T>(flag: Option<T>, cfg: &ConfigMap, key: &str) -> Result<Option<T>, CliError>
where
    T: FromStr,
    T::Err: fmt::Display,
{
    match flag {
        Some(v) => Ok(Some(v)),
        None => ctx(cfg.get(key), "config"),
    }
}

fn require<T>(value: Option<T>, what: &str) -> Result<T, CliError> {
    value.ok_or_else(|| CliError::Usage(format!("missing required parameter: {what}")))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let quiet = cli.quiet;
    match run(cli.cmd, quiet) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("sccp: {e}");
            ExitCode::from(e.code())
        }
    }
}

fn run(cmd: Cmd, quiet: bool) -> Result<(), CliError> {
    match cmd {
        Cmd::Generate(GenCmd::Sccp(args)) => cmd_generate_sccp(args, quiet),
        Cmd::Generate(GenCmd::Er(args)) => cmd_generate_er(args, quiet),
        Cmd::Analyze(args) => cmd_analyze(args, quiet),
        Cmd::Simulate(args) => cmd_simulate(args, quiet),
        Cmd::Fit(args) => cmd_fit(args, quiet),
        Cmd::Validate(args) => cmd_validate(args, quiet),
    }
}

#[derive(serde::Serialize)]
struct GenerateMeta<'a> {
    artifact_version: &'a str,
    command: &'a str,
    parameters: &'a SccpParams,
    nodes: usize,
    edges: usize,
    intra_edges: usize,
    inter_edges: usize,
    capped_nodes: usize,
    core_nodes: usize,
    outputs: Vec<String>,
}

fn cmd_generate_sccp(args: SccpArgs, quiet: bool) -> Result<(), CliError> {
    let cfg = load_config(args.config.as_deref())?;
    let k = require(pick(args.k, &cfg, "communities")?, "--k / communities")?;
    let s = require(pick(args.s, &cfg, "clique_size")?, "--s / clique_size")?;
    let t: Vec<usize> = match args.t {
        Some(v) => v,
        None => match cfg.raw("new_nodes") {
            Some(raw) => ctx(
                raw.split(',')
                    .map(|x| {
                        x.trim().parse().map_err(|_| {
                            sccp_core::Error::InvalidParam(format!(
                                "config key new_nodes: invalid count {x:?}"
                            ))
                        })
                    })
                    .collect(),
                "config",
            )?,
            None => return Err(CliError::Usage("missing required parameter: --t / new_nodes".into())),
        },
    };
    let f = require(pick(args.f, &cfg, "intra_fraction")?, "--f / intra_fraction")?;
    let (degree_min, degree_max) = match args.r {
        Some(r) => (r[0], r[1]),
        None => (
            require(pick(None, &cfg, "degree_min")?, "--r / degree_min")?,
            require(pick(None, &cfg, "degree_max")?, "--r / degree_max")?,
        ),
    };
    let core_fraction = pick(args.core_fraction, &cfg, "core_fraction")?.unwrap_or(0.1);
    let seed = pick(args.seed, &cfg, "seed")?.unwrap_or(0);

    let new_nodes = if t.len() == 1 {
        vec![t[0]; k]
    } else {
        t
    };
    let params = SccpParams {
        communities: k,
        clique_size: s,
        new_nodes,
        intra_fraction: f,
        degree_min,
        degree_max,
        core_fraction,
        rng_seed: seed,
    };
    let labeled = ctx(generate_sccp::<f64>(&params), "generate sccp")?;

    let prefix = resolve_out(args.out, &format!("sccp-k{k}-s{s}-seed{seed}"));
    let edges_path = prefix.with_extension("edges");
    let parts_path = prefix.with_extension("parts");
    let meta_path = prefix.with_extension("meta.json");

    let ids = NodeIdMap::identity(labeled.graph.node_count());
    let mut buf = Vec::new();
    ctx(
        write_edge_list(&labeled.graph, &ids, &mut buf, false),
        "write edges",
    )?;
    write_atomic(&edges_path, &buf)?;
    let mut buf = Vec::new();
    ctx(
        write_partition(&labeled.partition, &ids, &mut buf),
        "write partition",
    )?;
    write_atomic(&parts_path, &buf)?;

    let meta = GenerateMeta {
        artifact_version: VERSION,
        command: "generate sccp",
        parameters: &params,
        nodes: labeled.graph.node_count(),
        edges: labeled.graph.edge_count(),
        intra_edges: labeled.growth.intra_edges,
        inter_edges: labeled.growth.inter_edges,
        capped_nodes: labeled.growth.capped_nodes,
        core_nodes: labeled.partition.core_count(),
        outputs: vec![display(&edges_path), display(&parts_path)],
    };
    write_json_atomic(&meta_path, &meta)?;

    if !quiet {
        eprintln!(
            "generated {} nodes, {} edges ({} intra / {} inter), {} core -> {}",
            meta.nodes,
            meta.edges,
            meta.intra_edges,
            meta.inter_edges,
            meta.core_nodes,
            prefix.display()
        );
    }
    Ok(())
}

#[derive(serde::Serialize)]
struct ErMeta<'a> {
    artifact_version: &'a str,
    command: &'a str,
    n: usize,
    m: usize,
    seed: u64,
    outputs: Vec<String>,
}

fn cmd_generate_er(args: ErArgs, quiet: bool) -> Result<(), CliError> {
    let g = ctx(generate_er::<f64>(args.n, args.m, args.seed), "generate er")?;
    let prefix = resolve_out(args.out, &format!("er-n{}-m{}-seed{}", args.n, args.m, args.seed));
    let edges_path = prefix.with_extension("edges");
    let meta_path = prefix.with_extension("meta.json");

    let ids = NodeIdMap::identity(g.node_count());
    let mut buf = Vec::new();
    ctx(write_edge_list(&g, &ids, &mut buf, false), "write edges")?;
    write_atomic(&edges_path, &buf)?;
    write_json_atomic(
        &meta_path,
        &ErMeta {
            artifact_version: VERSION,
            command: "generate er",
            n: args.n,
            m: args.m,
            seed: args.seed,
            outputs: vec![display(&edges_path)],
        },
    )?;
    if !quiet {
        eprintln!(
            "generated {} nodes, {} edges -> {}",
            g.node_count(),
            g.edge_count(),
            prefix.display()
        );
    }
    Ok(())
}

#[derive(serde::Serialize)]
struct AnalyzeMeta<'a> {
    artifact_version: &'a str,
    command: &'a str,
    input: String,
    directed: bool,
    weighted: bool,
    reverse: bool,
    core_fraction: f64,
    nodes: usize,
    edges: usize,
    communities: usize,
    core_nodes: usize,
    modularity: f64,
    outputs: Vec<String>,
}

fn cmd_analyze(args: AnalyzeArgs, quiet: bool) -> Result<(), CliError> {
    let opts = LoadOptions {
        directed: args.directed,
        weighted: args.weighted,
        reverse: args.reverse,
    };
    let loaded: Loaded<f64> = ctx(
        load_edge_list(open(&args.input)?, &opts),
        &args.input.display().to_string(),
    )?;
    let (part, q) = ctx(
        analyze(&loaded.graph, args.core_fraction),
        "structure analysis",
    )?;

    let stem = args
        .input
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "analysis".into());
    let prefix = resolve_out(args.out, &stem);
    let parts_path = prefix.with_extension("parts");
    let meta_path = prefix.with_extension("analysis.meta.json");

    let mut buf = Vec::new();
    ctx(write_partition(&part, &loaded.ids, &mut buf), "write partition")?;
    write_atomic(&parts_path, &buf)?;
    write_json_atomic(
        &meta_path,
        &AnalyzeMeta {
            artifact_version: VERSION,
            command: "analyze",
            input: display(&args.input),
            directed: args.directed,
            weighted: args.weighted,
            reverse: args.reverse,
            core_fraction: args.core_fraction,
            nodes: loaded.graph.node_count(),
            edges: loaded.graph.edge_count(),
            communities: part.community_count(),
            core_nodes: part.core_count(),
            modularity: q,
            outputs: vec![display(&parts_path)],
        },
    )?;
    if !quiet {
        eprintln!(
            "analyzed {} nodes: {} communities, {} core nodes, modularity {:.4} -> {}",
            loaded.graph.node_count(),
            part.community_count(),
            part.core_count(),
            q,
            parts_path.display()
        );
    }
    Ok(())
}

#[derive(serde::Serialize)]
struct SimulateMeta<'a> {
    artifact_version: &'a str,
    command: &'a str,
    graph: String,
    partition: String,
    probabilities: &'a ProbabilityTable<f64>,
    seed_strategy: &'a str,
    seed_count: usize,
    trials: usize,
    max_iters: usize,
    patience: Option<usize>,
    base_seed: u64,
    format: &'a str,
    /// Per-trial simulation RNG seeds (base + trial index).
    sim_seeds: Vec<u64>,
    /// Per-trial resolved seed node sets.
    seed_nodes: Vec<Vec<usize>>,
    outputs: Vec<String>,
    wall_time_s: f64,
}

fn cmd_simulate(args: SimulateArgs, quiet: bool) -> Result<(), CliError> {
    let started = Instant::now();
    let cfg = load_config(args.config.as_deref())?;
    let table = resolve_table(&args, &cfg)?;

    let graph_path = require(pick(args.graph, &cfg, "graph")?, "--graph")?;
    let part_path = require(pick(args.partition, &cfg, "partition")?, "--partition")?;
    let seeds_arg = require(pick(args.seeds, &cfg, "seeds")?, "--seeds")?;
    let trials = pick(args.trials, &cfg, "trials")?.unwrap_or(1);
    let max_iters = pick(args.max_iters, &cfg, "max_iters")?.unwrap_or(10_000);
    let patience = pick(args.patience, &cfg, "patience")?;
    let base_seed = pick(args.seed, &cfg, "seed")?.unwrap_or(0);
    let format = pick(args.format, &cfg, "format")?.unwrap_or(Format::Csv);

    if let Some(jobs) = args.jobs {
        // Only the first global-pool initialization sticks; later calls
        // (e.g. in tests sharing a process) keep the existing pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
    }

    let loaded: Loaded<f64> = ctx(
        load_edge_list(
            open(&graph_path)?,
            &LoadOptions { directed: false, weighted: false, reverse: false },
        ),
        &graph_path.display().to_string(),
    )?;
    let part = ctx(
        read_partition(open(&part_path)?),
        &part_path.display().to_string(),
    )?;
    let part = ctx(part.align(&loaded.ids), "aligning partition to graph")?;

    let spec = SeedSpec {
        strategy: seeds_arg.strategy.clone(),
        count: seeds_arg.count,
        rng_seed: base_seed,
    };
    let opts = SimOptions { max_iters, patience, rng_seed: base_seed };
    let keep = args.keep_traces || args.write_infections || trials == 1;
    let run = ctx(
        monte_carlo(&loaded.graph, &part, &table, &spec, trials, &opts, keep),
        "simulate",
    )?;

    let stem = graph_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "run".into());
    let prefix = resolve_out(args.out, &format!("{stem}-sim-seed{base_seed}"));
    let mut outputs = Vec::new();

    if trials > 1 {
        let path = prefix.with_extension(format!("aggregate.{}", format.ext()));
        let table_out = AggregateTable::from_run(&run);
        let mut buf = Vec::new();
        ctx(
            write_aggregate(&table_out, format.export(), &mut buf),
            "write aggregate",
        )?;
        write_atomic(&path, &buf)?;
        outputs.push(display(&path));
    }
    if let Some(traces) = &run.traces {
        if trials == 1 || args.keep_traces {
            for (i, trace) in traces.iter().enumerate() {
                let path = if trials == 1 {
                    prefix.with_extension(format!("trace.{}", format.ext()))
                } else {
                    prefix.with_extension(format!("trace-{i:04}.{}", format.ext()))
                };
                let table_out = TraceTable::from_trace(trace);
                let mut buf = Vec::new();
                ctx(write_trace(&table_out, format.export(), &mut buf), "write trace")?;
                write_atomic(&path, &buf)?;
                outputs.push(display(&path));
            }
        }
        if args.write_infections {
            let ig = ctx(infection_graph::<f64>(traces), "infection graph")?;
            let path = prefix.with_extension("infections");
            let mut buf = Vec::new();
            ctx(
                write_edge_list(&ig, &loaded.ids, &mut buf, true),
                "write infections",
            )?;
            write_atomic(&path, &buf)?;
            outputs.push(display(&path));
        }
    }

    // Re-derive the per-trial seed sets for the metadata record.
    let mut seed_nodes = Vec::with_capacity(trials);
    for i in 0..trials {
        let spec_i = SeedSpec {
            rng_seed: base_seed.wrapping_add(i as u64),
            ..spec.clone()
        };
        seed_nodes.push(ctx(select_seeds(&spec_i, &part), "seed selection")?);
    }

    let meta_path = prefix.with_extension("sim.meta.json");
    write_json_atomic(
        &meta_path,
        &SimulateMeta {
            artifact_version: VERSION,
            command: "simulate",
            graph: display(&graph_path),
            partition: display(&part_path),
            probabilities: &table,
            seed_strategy: &seeds_arg.raw,
            seed_count: seeds_arg.count,
            trials,
            max_iters,
            patience,
            base_seed,
            format: format.ext(),
            sim_seeds: (0..trials as u64).map(|i| base_seed.wrapping_add(i)).collect(),
            seed_nodes,
            outputs: outputs.clone(),
            wall_time_s: started.elapsed().as_secs_f64(),
        },
    )?;

    if !quiet {
        let last = run.records.last();
        eprintln!(
            "simulated {} trial(s), {} iterations, mean final infected {:.1} -> {}",
            trials,
            run.records.len(),
            last.map_or(0.0, |r| r.cumulative.mean),
            prefix.display()
        );
    }
    Ok(())
}

fn resolve_table(args: &SimulateArgs, cfg: &ConfigMap) -> Result<ProbabilityTable<f64>, CliError> {
    let table = if args.ebh_paper {
        ProbabilityTable::ebh_default()
    } else if let Some(p) = args.uniform {
        ProbabilityTable::uniform(p)
    } else if let Some(v) = &args.probs {
        ProbabilityTable {
            core_core: v[0],
            core_periphery: v[1],
            periphery_core: v[2],
            periphery_same: v[3],
            periphery_cross: v[4],
        }
    } else if let Some(raw) = cfg.raw("table") {
        parse_table_value(raw).map_err(CliError::Usage)?
    } else {
        return Err(CliError::Usage(
            "no probability table: pass --ebh-paper, --uniform P, or --probs CC,CP,PC,PP0,PP1"
                .into(),
        ));
    };
    ctx(table.validate().map(|()| table), "probability table")
}

/// Config-file grammar for tables: `ebh`, `uniform:P`, or five commas.
fn parse_table_value(raw: &str) -> Result<ProbabilityTable<f64>, String> {
    let raw = raw.trim();
    if raw.eq_ignore_ascii_case("ebh") {
        return Ok(ProbabilityTable::ebh_default());
    }
    if let Some(p) = raw.strip_prefix("uniform:") {
        let p = p
            .trim()
            .parse()
            .map_err(|_| format!("invalid uniform probability {p:?}"))?;
        return Ok(ProbabilityTable::uniform(p));
    }
    let vals: Vec<f64> = raw
        .split(',')
        .map(|x| {
            x.trim()
                .parse()
                .map_err(|_| format!("invalid probability {x:?} in table"))
        })
        .collect::<Result<_, String>>()?;
    if vals.len() != 5 {
        return Err(format!(
            "table wants 5 probabilities (CC,CP,PC,PP0,PP1), got {}",
            vals.len()
        ));
    }
    Ok(ProbabilityTable {
        core_core: vals[0],
        core_periphery: vals[1],
        periphery_core: vals[2],
        periphery_same: vals[3],
        periphery_cross: vals[4],
    })
}

#[derive(serde::Serialize)]
struct FitMeta<'a> {
    artifact_version: &'a str,
    command: &'a str,
    input: String,
    series_len: usize,
    plateau_window: Option<usize>,
}

#[derive(serde::Serialize)]
struct FitOut<'a> {
    meta: FitMeta<'a>,
    sigmoid: SigmoidFit<f64>,
    plateau: Option<PlateauReport<f64>>,
}

fn cmd_fit(args: FitArgs, quiet: bool) -> Result<(), CliError> {
    let text = read_to_string(&args.input)?;
    let series = ctx(
        read_cumulative(text.as_bytes()),
        &args.input.display().to_string(),
    )?;
    let fit = ctx(fit_sigmoid(&series), "fit")?;

    let plateau = match args.plateau_window {
        None => None,
        Some(window) => {
            let table: TraceTable = serde_json::from_str(&text).map_err(|_| {
                CliError::Precondition(
                    "plateau detection needs a JSON trace export (it carries core counts)".into(),
                )
            })?;
            let new: Vec<usize> = table.rows.iter().map(|r| r.new as usize).collect();
            let core: Vec<usize> = table.rows.iter().map(|r| r.cum_core as usize).collect();
            Some(ctx(plateau_from_series(&new, &core, window), "plateau")?)
        }
    };

    let out = FitOut {
        meta: FitMeta {
            artifact_version: VERSION,
            command: "fit",
            input: display(&args.input),
            series_len: series.len(),
            plateau_window: args.plateau_window,
        },
        sigmoid: fit,
        plateau,
    };
    emit_json(&out, resolve_opt_out(args.out.clone()).as_deref())?;
    if !quiet {
        eprintln!(
            "fit: amplitude {:.4}, rate {:.6}, midpoint {:.3}, r2 {:.5}{}",
            fit.amplitude,
            fit.rate,
            fit.midpoint,
            fit.r2,
            if fit.rate_at_bound { " (rate at search bound)" } else { "" }
        );
    }
    Ok(())
}

#[derive(serde::Serialize)]
struct ClassRow {
    count: usize,
    mean_weight: Option<f64>,
}

#[derive(serde::Serialize)]
struct ValidateMeta<'a> {
    artifact_version: &'a str,
    command: &'a str,
    partition: String,
    interaction: String,
    allow_missing: bool,
}

#[derive(serde::Serialize)]
struct ValidateOut<'a> {
    meta: ValidateMeta<'a>,
    classes: std::collections::BTreeMap<&'static str, ClassRow>,
    /// Classes with at least one edge, by mean weight descending.
    ordering: Vec<&'static str>,
    ordering_holds: Option<bool>,
    classified_edges: usize,
    skipped_edges: usize,
    matched_nodes: usize,
    unmatched_nodes: usize,
}

fn cmd_validate(args: ValidateArgs, quiet: bool) -> Result<(), CliError> {
    let table: PartitionTable = ctx(
        read_partition(open(&args.partition)?),
        &args.partition.display().to_string(),
    )?;
    let loaded: Loaded<f64> = ctx(
        load_edge_list(
            open(&args.interaction)?,
            &LoadOptions {
                directed: !args.undirected,
                weighted: true,
                reverse: false,
            },
        ),
        &args.interaction.display().to_string(),
    )?;

    let mut info: Vec<Option<(Role, u32)>> = Vec::with_capacity(loaded.ids.len());
    let mut missing: Vec<String> = Vec::new();
    for v in 0..loaded.ids.len() {
        let label = loaded.ids.label(v);
        let entry = table.lookup(label);
        if entry.is_none() {
            missing.push(label.to_string());
        }
        info.push(entry);
    }
    if !missing.is_empty() && !args.allow_missing {
        let count = missing.len();
        missing.truncate(5);
        return Err(CliError::Precondition(format!(
            "{count} interaction node(s) missing from the partition (e.g. {missing:?}); \
             pass --allow-missing to skip them"
        )));
    }
    let unmatched = missing.len();

    let report = ctx(
        weight_report_partial(&loaded.graph, &info),
        "weight report",
    )?;

    let mut classes = std::collections::BTreeMap::new();
    for class in EdgeClass::ALL {
        classes.insert(
            class.as_str(),
            ClassRow {
                count: report.count(class),
                mean_weight: report.mean_weight(class),
            },
        );
    }
    let out = ValidateOut {
        meta: ValidateMeta {
            artifact_version: VERSION,
            command: "validate",
            partition: display(&args.partition),
            interaction: display(&args.interaction),
            allow_missing: args.allow_missing,
        },
        classes,
        ordering: report.ordering.iter().map(|(c, _)| c.as_str()).collect(),
        ordering_holds: report.ordering_holds,
        classified_edges: report.classified_edges,
        skipped_edges: report.skipped_edges,
        matched_nodes: loaded.ids.len() - unmatched,
        unmatched_nodes: unmatched,
    };
    emit_json(&out, resolve_opt_out(args.out.clone()).as_deref())?;
    if !quiet {
        eprintln!(
            "validated {} directed edges: ordering {:?}, holds = {:?}",
            out.classified_edges, out.ordering, out.ordering_holds
        );
    }
    Ok(())
}

fn emit_json<T: serde::Serialize>(value: &T, out: Option<&Path>) -> Result<(), CliError> {
    match out {
        Some(path) => write_json_atomic(path, value),
        None => {
            let text = serde_json::to_string_pretty(value)
                .map_err(|e| CliError::Precondition(format!("serializing output: {e}")))?;
            let mut stdout = std::io::stdout().lock();
            writeln!(stdout, "{text}").map_err(|e| CliError::Io(format!("stdout: {e}")))?;
            Ok(())
        }
    }
}

fn display(path: &Path) -> String {
    path.display().to_string()
}
