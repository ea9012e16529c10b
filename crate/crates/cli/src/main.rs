use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use graph_aggr::gen::{EdgeCount, GeneratorKind, RMAT_DEFAULT};
use graph_aggr::{generate, GeneratorSpec, Strategy, APPLICATION_CONFIGS};
use graph_aggr_cli::bench::write_csv;
use graph_aggr_cli::{
    default_threads, run_bench, run_verify, write_graph, BenchOptions, GraphFormat, GraphSource, VerifyOptions,
};

#[derive(Parser)]
#[command(name = "graph-aggr", version, about = "Graph aggregation kernels: generate, verify, benchmark")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic graph and print its degree statistics.
    Gen(GenArgs),
    /// Check every strategy against the serial oracle.
    Verify(VerifyArgs),
    /// Time strategies and emit CSV.
    Bench(BenchArgs),
}

#[derive(Args)]
struct Common {
    /// Edge-list or binary CSR file.
    #[arg(long, conflicts_with = "preset")]
    graph: Option<PathBuf>,
    /// Named preset (pubmed-like, reddit-like, ogbprod-like, bgs-like, reddit-like-small, smoke).
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Feature width.
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long, value_enum, default_value = "edgelist")]
    format: GraphFormat,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Er,
    Rmat,
    Sbm,
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum, required_unless_present = "preset")]
    kind: Option<Kind>,
    #[arg(long)]
    nodes: Option<usize>,
    /// Edge count (er: exact count; rmat: required).
    #[arg(long)]
    edges: Option<usize>,
    /// Edge probability for er.
    #[arg(long)]
    p: Option<f64>,
    /// RMAT quadrant weights a,b,c,d.
    #[arg(long, value_delimiter = ',')]
    abcd: Option<Vec<f64>>,
    #[arg(long)]
    blocks: Option<usize>,
    #[arg(long)]
    pin: Option<f64>,
    #[arg(long)]
    pout: Option<f64>,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    common: Common,
    /// Configurations to check; defaults to the GNN application set.
    #[arg(long, value_delimiter = ',')]
    configs: Vec<String>,
    #[arg(long, value_delimiter = ',', value_parser = parse_strategy)]
    strategies: Vec<Strategy>,
    #[arg(long, env = "GRAPH_AGGR_THREADS")]
    threads: Option<usize>,
    #[arg(long, hide = true)]
    inject_fault: bool,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value = "u_copy_add_v")]
    config: String,
    #[arg(long, value_delimiter = ',', value_parser = parse_strategy)]
    strategies: Vec<Strategy>,
    #[arg(long, value_delimiter = ',')]
    threads: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    kb: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    nb: Vec<usize>,
    #[arg(long, default_value_t = 10)]
    iters: usize,
    #[arg(long, default_value_t = 2)]
    warmup: usize,
    /// Count BlockPlan construction in every timed iteration.
    #[arg(long)]
    include_plan: bool,
}

fn parse_strategy(s: &str) -> Result<Strategy, String> {
    Strategy::from_token(s).ok_or_else(|| format!("unknown strategy {s:?} (push, pull, blocked, spmm)"))
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Gen(a) => gen(a),
        Command::Verify(a) => verify(a),
        Command::Bench(a) => bench(a),
    }
}

fn gen(a: GenArgs) -> Result<ExitCode> {
    let c = &a.common;
    let edges = match (a.kind, &c.preset) {
        (None, Some(_)) => GraphSource::from_flags(None, c.preset.clone(), None)?.load(c.seed, c.dim)?.edges,
        (Some(kind), None) => {
            let num_nodes = a.nodes.context("--nodes is required")?;
            let kind = match kind {
                Kind::Er => match (a.edges, a.p) {
                    (Some(m), None) => GeneratorKind::ErdosRenyi { edges: EdgeCount::Exact(m) },
                    (None, Some(p)) => GeneratorKind::ErdosRenyi { edges: EdgeCount::Probability(p) },
                    _ => bail!("er needs exactly one of --edges or --p"),
                },
                Kind::Rmat => {
                    let abcd = match a.abcd.as_deref() {
                        None => RMAT_DEFAULT,
                        Some(&[x, y, z, w]) => [x, y, z, w],
                        Some(_) => bail!("--abcd takes four comma-separated weights"),
                    };
                    GeneratorKind::Rmat { num_edges: a.edges.context("rmat needs --edges")?, abcd }
                }
                Kind::Sbm => GeneratorKind::Sbm {
                    blocks: a.blocks.context("sbm needs --blocks")?,
                    p_in: a.pin.context("sbm needs --pin")?,
                    p_out: a.pout.context("sbm needs --pout")?,
                },
            };
            generate(&GeneratorSpec { kind, num_nodes, seed: c.seed.unwrap_or(0) })?
        }
        _ => bail!("give either --kind or --preset"),
    };
    let stats = write_graph(&edges, c.format, c.out.as_deref())?;
    println!("{stats}");
    Ok(ExitCode::SUCCESS)
}

fn verify(a: VerifyArgs) -> Result<ExitCode> {
    let c = &a.common;
    let graph = GraphSource::from_flags(c.graph.clone(), c.preset.clone(), Some("smoke"))?.load(c.seed, c.dim)?;
    let opts = VerifyOptions {
        configs: if a.configs.is_empty() {
            APPLICATION_CONFIGS.iter().map(|s| s.to_string()).collect()
        } else {
            a.configs
        },
        strategies: if a.strategies.is_empty() { Strategy::ALL.to_vec() } else { a.strategies },
        threads: a.threads.unwrap_or_else(default_threads),
        inject_fault: a.inject_fault,
    };
    let summary = run_verify(&graph, &opts)?;
    println!("{}", summary.report());
    Ok(if summary.passed() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn bench(a: BenchArgs) -> Result<ExitCode> {
    let c = &a.common;
    let graph = GraphSource::from_flags(c.graph.clone(), c.preset.clone(), None)?.load(c.seed, c.dim)?;
    let opts = BenchOptions {
        config: a.config,
        strategies: if a.strategies.is_empty() { Strategy::ALL.to_vec() } else { a.strategies },
        threads: if a.threads.is_empty() { vec![default_threads()] } else { a.threads },
        kb: a.kb,
        nb: a.nb,
        iters: a.iters,
        warmup: a.warmup,
        include_plan: a.include_plan,
    };
    let reports = run_bench(&graph, &opts)?;
    match &c.out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
            write_csv(&mut w, &reports)?;
            w.flush()?;
        }
        None => write_csv(io::stdout().lock(), &reports)?,
    }
    Ok(ExitCode::SUCCESS)
}
