use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use jtree::bench::{self, BenchConfig};
use jtree::format::{self, NamedFindings, TreeDocument};
use jtree::synth::{generate_synthetic, SynthParams};
use jtree::{Error, Result};
use jtree_core::{
    approximate, compile, worst_case_bound, ApproximationConfig, Heuristic, JunctionTree, Method, NetworkSpec,
};
use serde_json::json;

#[derive(Parser)]
#[command(name = "jtree", version, about = "Junction-tree inference with approximation and compression")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compile a network into an initialized junction tree.
    Compile(CompileArgs),
    /// Annihilate small entries of a tree and compress it.
    Approximate(ApproximateArgs),
    /// Posterior marginals, normalization constant and error bounds for a case.
    Query(QueryArgs),
    /// Statistics of a tree file, or of the tree compiled from a network file.
    Stats(StatsArgs),
    /// Storage, time and accuracy over an epsilon sweep.
    Bench(BenchArgs),
    /// Write a synthetic network.
    Generate(GenerateArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum HeuristicArg {
    MaxCard,
    MinSize,
    MinWeight,
}

impl From<HeuristicArg> for Heuristic {
    fn from(h: HeuristicArg) -> Heuristic {
        match h {
            HeuristicArg::MaxCard => Heuristic::MaxCardinality,
            HeuristicArg::MinSize => Heuristic::MinSize,
            HeuristicArg::MinWeight => Heuristic::MinWeight,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Halving,
    Sort,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Method {
        match m {
            MethodArg::Halving => Method::Halving,
            MethodArg::Sort => Method::SortExact,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputFormat {
    Csv,
    Json,
}

#[derive(Args)]
struct TreeOptions {
    #[arg(long, value_enum, default_value = "min-size")]
    heuristic: HeuristicArg,
    /// Start node of the maximum cardinality search.
    #[arg(long)]
    start_node: Option<String>,
}

#[derive(Args)]
struct CompileArgs {
    network: PathBuf,
    #[command(flatten)]
    tree: TreeOptions,
    /// Where to write the tree file.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Format of the printed statistics; key=value lines by default.
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,
}

#[derive(Args)]
struct ApproximateArgs {
    tree: PathBuf,
    #[arg(long)]
    epsilon: f64,
    #[arg(long, value_enum, default_value = "halving")]
    method: MethodArg,
    /// Where to write the approximated tree file.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Where to write the finding-error table as CSV.
    #[arg(long)]
    errors: Option<PathBuf>,
    /// Where to write the binary table encoding.
    #[arg(long)]
    binary: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,
}

#[derive(Args)]
struct QueryArgs {
    tree: PathBuf,
    /// A finding `node=state`; `node=s1|s2` allows several states.
    #[arg(long)]
    evidence: Vec<String>,
    #[arg(long)]
    case_file: Option<PathBuf>,
    /// Nodes to report; all nodes when omitted.
    #[arg(long)]
    hypothesis: Vec<String>,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,
}

#[derive(Args)]
struct StatsArgs {
    /// A tree file or a network file.
    input: PathBuf,
    #[command(flatten)]
    tree: TreeOptions,
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 50)]
    nodes: usize,
    #[arg(long, default_value_t = 3)]
    max_parents: usize,
    #[arg(long, default_value_t = 4)]
    min_states: usize,
    #[arg(long, default_value_t = 8)]
    max_states: usize,
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    #[arg(long, default_value_t = 0.67)]
    zero_fraction: f64,
    /// Parents come from this many preceding nodes; 0 means all predecessors.
    #[arg(long, default_value_t = 5)]
    window: usize,
}

impl SynthArgs {
    fn params(&self, seed: u64) -> SynthParams {
        SynthParams {
            nodes: self.nodes,
            max_parents: self.max_parents,
            min_states: self.min_states,
            max_states: self.max_states,
            alpha: self.alpha,
            zero_fraction: self.zero_fraction,
            window: (self.window > 0).then_some(self.window),
            seed,
        }
    }
}

#[derive(Args)]
struct BenchArgs {
    /// Network file; a synthetic network is generated when omitted.
    network: Option<PathBuf>,
    /// Benchmark a synthetic network built from the generator flags.
    #[arg(long)]
    synthetic: bool,
    #[command(flatten)]
    synth: SynthArgs,
    #[command(flatten)]
    tree: TreeOptions,
    #[arg(long, value_delimiter = ',', default_value = "0,1e-5,1e-4,1e-3,1e-2")]
    epsilon: Vec<f64>,
    #[arg(long, value_enum, default_value = "halving")]
    method: MethodArg,
    #[arg(long, default_value_t = 10)]
    cases: usize,
    #[arg(long, default_value_t = 3)]
    max_findings: usize,
    /// Nodes findings may be placed on, comma separated; leaves by default.
    #[arg(long, value_delimiter = ',')]
    observable: Vec<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = bench::MIN_REPS)]
    reps: usize,
    /// Add propagation time columns (makes the output nondeterministic).
    #[arg(long)]
    timing: bool,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: OutputFormat,
}

#[derive(Args)]
struct GenerateArgs {
    #[command(flatten)]
    synth: SynthArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    output: Option<PathBuf>,
}

fn emit(output: Option<&Path>, text: &str) -> Result<()> {
    match output {
        Some(path) => format::write_file(path, text),
        None => {
            std::io::stdout().write_all(text.as_bytes()).map_err(|source| Error::Io { path: "<stdout>".into(), source })
        }
    }
}

fn validated(net: &NetworkSpec) -> Result<()> {
    net.ensure_valid()?;
    Ok(())
}

fn start_index(net: &NetworkSpec, start: &Option<String>) -> Result<usize> {
    match start {
        None => Ok(0),
        Some(id) => net.node_index(id).ok_or_else(|| jtree_core::Error::UnknownNode(id.clone()).into()),
    }
}

fn compile_tree(net: &NetworkSpec, opts: &TreeOptions) -> Result<JunctionTree> {
    validated(net)?;
    Ok(compile(net, opts.heuristic.into(), start_index(net, &opts.start_node)?)?)
}

fn stats_text(jt: &JunctionTree, fmt: Option<OutputFormat>) -> String {
    let stats = jt.stats();
    match fmt {
        None => format::stats_record(&stats),
        Some(OutputFormat::Csv) => format::stats_csv(&stats),
        Some(OutputFormat::Json) => format::stats_json(&stats),
    }
}

fn cmd_compile(args: CompileArgs) -> Result<()> {
    let net = format::load_network(&args.network)?;
    let jt = compile_tree(&net, &args.tree)?;
    if let Some(path) = &args.output {
        format::write_file(path, format::serialize_tree(&TreeDocument { tree: jt.clone(), report: None }))?;
    }
    emit(None, &stats_text(&jt, args.format))
}

fn cmd_approximate(args: ApproximateArgs) -> Result<()> {
    let doc = format::load_tree(&args.tree)?;
    let config = ApproximationConfig::new(args.epsilon, args.method.into())?;
    let (tree, report) = approximate(&doc.tree, &config)?;
    let encoded = format::encode_tables(&tree);
    if let Some(path) = &args.errors {
        format::write_file(path, format::finding_errors_csv(&tree, &report))?;
    }
    if let Some(path) = &args.binary {
        format::write_file(path, &encoded.bytes)?;
    }
    let nonzeros: usize = tree.cliques().iter().map(|c| c.table.nnz()).sum();
    let summary = [
        ("epsilon", config.epsilon.to_string()),
        ("method", config.method.name().to_string()),
        ("global_error", report.global_error.to_string()),
        ("payload_bytes", encoded.payload_bytes.to_string()),
        ("total_bytes", encoded.bytes.len().to_string()),
        ("dense_bytes", tree.dense_bytes().to_string()),
        ("clique_nonzeros", nonzeros.to_string()),
        ("within_local_budget", report.within_local_budget().to_string()),
    ];
    if let Some(path) = &args.output {
        format::write_file(path, format::serialize_tree(&TreeDocument { tree, report: Some(report) }))?;
    }
    emit(None, &key_values(&summary, args.format))
}

fn key_values(pairs: &[(&str, String)], fmt: Option<OutputFormat>) -> String {
    match fmt {
        None => pairs.iter().map(|(k, v)| format!("{k}={v}\n")).collect(),
        Some(OutputFormat::Csv) => {
            let keys: Vec<&str> = pairs.iter().map(|p| p.0).collect();
            let values: Vec<&str> = pairs.iter().map(|p| p.1.as_str()).collect();
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(&keys).expect("in-memory write");
            w.write_record(&values).expect("in-memory write");
            String::from_utf8(w.into_inner().expect("in-memory write")).expect("utf-8 output")
        }
        Some(OutputFormat::Json) => {
            let map: serde_json::Map<String, serde_json::Value> =
                pairs.iter().map(|(k, v)| (k.to_string(), json!(v))).collect();
            format!("{}\n", serde_json::to_string_pretty(&map).expect("serializable map"))
        }
    }
}

fn cmd_query(args: QueryArgs) -> Result<()> {
    let doc = format::load_tree(&args.tree)?;
    let mut named: NamedFindings = match &args.case_file {
        Some(path) => format::parse_case(&format::read_file(path)?, &path.display().to_string())?,
        None => Vec::new(),
    };
    for flag in &args.evidence {
        named.push(format::parse_evidence_flag(flag)?);
    }
    let case = format::resolve_case(&doc.tree, &named)?;
    let mut jt = doc.tree.clone();
    jt.enter_case(&case)?;
    let out = jt.propagate()?;
    if out.excluded {
        return Err(jtree_core::Error::Excluded.into());
    }
    let bound = doc.report.as_ref().map(|r| worst_case_bound(r, &case, out.normalization));
    let nodes: Vec<usize> = if args.hypothesis.is_empty() {
        (0..jt.variables().len()).collect()
    } else {
        args.hypothesis
            .iter()
            .map(|id| jt.node_index(id).ok_or_else(|| jtree_core::Error::UnknownNode(id.clone()).into()))
            .collect::<Result<_>>()?
    };
    let mut rows = Vec::new();
    for &v in &nodes {
        let var = &jt.variables()[v];
        for (label, p) in var.states.iter().zip(jt.marginal(v)?) {
            rows.push((var.id.clone(), label.clone(), p));
        }
    }
    let coarse = bound.map(|b| b.coarse.to_string()).unwrap_or_default();
    let refined = bound.map(|b| b.refined.to_string()).unwrap_or_default();
    let text = match args.format {
        None => {
            let mut s = format!("mu_case={}\n", out.normalization);
            if bound.is_some() {
                s += &format!("coarse_bound={coarse}\nrefined_bound={refined}\n");
            }
            for (node, state, p) in &rows {
                s += &format!("P({node}={state})={p}\n");
            }
            s
        }
        Some(OutputFormat::Csv) => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["node", "state", "posterior", "mu_case", "coarse_bound", "refined_bound"])
                .expect("in-memory write");
            for (node, state, p) in &rows {
                w.write_record([node, state, &p.to_string(), &out.normalization.to_string(), &coarse, &refined])
                    .expect("in-memory write");
            }
            String::from_utf8(w.into_inner().expect("in-memory write")).expect("utf-8 output")
        }
        Some(OutputFormat::Json) => {
            let posteriors: Vec<_> =
                rows.iter().map(|(n, s, p)| json!({"node": n, "state": s, "posterior": p})).collect();
            let value = json!({
                "mu_case": out.normalization,
                "coarse_bound": bound.map(|b| b.coarse),
                "refined_bound": bound.map(|b| b.refined),
                "posteriors": posteriors,
            });
            format!("{}\n", serde_json::to_string_pretty(&value).expect("serializable value"))
        }
    };
    emit(args.output.as_deref(), &text)
}

fn cmd_stats(args: StatsArgs) -> Result<()> {
    let text = format::read_file(&args.input)?;
    let context = args.input.display().to_string();
    let is_tree = serde_json::from_str::<serde_json::Value>(&text).ok().is_some_and(|v| v.get("format").is_some());
    let jt = if is_tree {
        format::parse_tree(&text, &context)?.tree
    } else {
        compile_tree(&format::parse_network(&text, &context)?, &args.tree)?
    };
    emit(None, &stats_text(&jt, args.format))
}

fn cmd_bench(args: BenchArgs) -> Result<()> {
    let net = match (&args.network, args.synthetic) {
        (Some(path), false) => format::load_network(path)?,
        (None, _) => generate_synthetic(&args.synth.params(args.seed))?,
        (Some(_), true) => return Err(Error::Generator("give either a network file or --synthetic".into())),
    };
    validated(&net)?;
    let observable = if args.observable.is_empty() {
        None
    } else {
        Some(
            args.observable
                .iter()
                .map(|id| net.node_index(id).ok_or_else(|| jtree_core::Error::UnknownNode(id.clone()).into()))
                .collect::<Result<Vec<_>>>()?,
        )
    };
    let cfg = BenchConfig {
        heuristic: args.tree.heuristic.into(),
        start: start_index(&net, &args.tree.start_node)?,
        epsilons: args.epsilon,
        method: args.method.into(),
        cases: args.cases,
        max_findings: args.max_findings,
        seed: args.seed,
        observable,
        reps: args.reps,
        timing: args.timing,
    };
    let out = bench::run_bench(&net, &cfg)?;
    let text = match args.format {
        OutputFormat::Csv => bench::to_csv(&out),
        OutputFormat::Json => bench::to_json(&out),
    };
    emit(args.output.as_deref(), &text)
}

fn cmd_generate(args: GenerateArgs) -> Result<()> {
    let net = generate_synthetic(&args.synth.params(args.seed))?;
    emit(args.output.as_deref(), &format::serialize_network(&net))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Compile(a) => cmd_compile(a),
        Command::Approximate(a) => cmd_approximate(a),
        Command::Query(a) => cmd_query(a),
        Command::Stats(a) => cmd_stats(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Generate(a) => cmd_generate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if let Error::Core(jtree_core::Error::InvalidNetwork(violations)) = &e {
                for v in violations {
                    eprintln!("  {v}");
                }
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
