//! Commands behind the `graph-aggr` binary: graph generation, oracle
//! verification and strategy benchmarks.

pub mod bench;
pub mod verify;

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use graph_aggr::gen::{preset, PRESET_SEED};
use graph_aggr::io::{load_graph, save_csr, save_edge_list};
use graph_aggr::{build_csr, degree_stats, generate, DegreeStats, EdgeList, GeneratorSpec, Orientation};

pub use bench::{run_bench, BenchOptions, BenchReport, CSV_HEADER};
pub use verify::{run_verify, CaseResult, VerifyOptions, VerifySummary};

/// Feature width used for `--graph` inputs when `--dim` is not given.
pub const DEFAULT_DIM: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub enum GraphSource {
    File(PathBuf),
    Preset(String),
}

/// A loaded graph with its default feature width and seed.
#[derive(Debug, Clone)]
pub struct LoadedGraph {
    pub name: String,
    pub edges: EdgeList,
    pub dim: usize,
    pub seed: u64,
}

impl GraphSource {
    pub fn from_flags(graph: Option<PathBuf>, preset: Option<String>, fallback: Option<&str>) -> Result<Self> {
        match (graph, preset) {
            (Some(_), Some(_)) => bail!("--graph and --preset are mutually exclusive"),
            (Some(p), None) => Ok(GraphSource::File(p)),
            (None, Some(n)) => Ok(GraphSource::Preset(n)),
            (None, None) => match fallback {
                Some(n) => Ok(GraphSource::Preset(n.to_string())),
                None => bail!("one of --graph or --preset is required"),
            },
        }
    }

    /// Loads or generates the graph. `seed` overrides the preset seed and
    /// `dim` the default feature width.
    pub fn load(&self, seed: Option<u64>, dim: Option<usize>) -> Result<LoadedGraph> {
        let loaded = match self {
            GraphSource::File(path) => LoadedGraph {
                name: path.display().to_string(),
                edges: load_graph(path).with_context(|| format!("loading {}", path.display()))?,
                dim: dim.unwrap_or(DEFAULT_DIM),
                seed: seed.unwrap_or(PRESET_SEED),
            },
            GraphSource::Preset(name) => {
                let p = preset(name)?;
                let spec = GeneratorSpec { seed: seed.unwrap_or(p.spec.seed), ..p.spec };
                LoadedGraph {
                    name: name.clone(),
                    edges: generate(&spec)?,
                    dim: dim.unwrap_or(p.feature_dim),
                    seed: spec.seed,
                }
            }
        };
        if loaded.dim == 0 {
            bail!("--dim must be at least 1");
        }
        Ok(loaded)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum GraphFormat {
    Edgelist,
    Csr,
}

/// Writes `edges` in `format` and returns its degree statistics.
pub fn write_graph(edges: &EdgeList, format: GraphFormat, out: Option<&Path>) -> Result<DegreeStats> {
    let g = build_csr(edges, Orientation::DstMajor)?;
    if let Some(path) = out {
        match format {
            GraphFormat::Edgelist => save_edge_list(path, edges),
            GraphFormat::Csr => save_csr(path, &g),
        }
        .with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(degree_stats(&g))
}

/// Default thread count: `GRAPH_AGGR_THREADS` if set, else hardware concurrency.
pub fn default_threads() -> usize {
    std::env::var("GRAPH_AGGR_THREADS")
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .filter(|&t: &usize| t > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}
