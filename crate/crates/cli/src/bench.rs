use std::io::Write;
use std::time::Instant;

use anyhow::{bail, Result};
use graph_aggr::kernels::plan::{default_kb, default_nb};
use graph_aggr::kernels::{owner_orientation, preferred_orientation};
use graph_aggr::{
    build_block_plan, build_csr, named_config, random_features, transpose, BrConfig, CsrGraph, Executor, FeatureMatrix,
    Operand, Operands, Orientation, Strategy,
};

use crate::LoadedGraph;

pub const CSV_HEADER: &str = "config,strategy,nodes,edges,dim,threads,kb,nb,iters,mean_s,min_s,gbps";

#[derive(Debug, Clone)]
pub struct BenchOptions {
    pub config: String,
    pub strategies: Vec<Strategy>,
    pub threads: Vec<usize>,
    /// Empty means the default for the feature width.
    pub kb: Vec<usize>,
    pub nb: Vec<usize>,
    pub iters: usize,
    pub warmup: usize,
    pub include_plan: bool,
}

/// One timed combination. `kb` and `nb` are 0 for strategies without a plan.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub config: String,
    pub strategy: Strategy,
    pub num_nodes: usize,
    pub num_edges: usize,
    pub dim: usize,
    pub threads: usize,
    pub kb: usize,
    pub nb: usize,
    pub warmup_iters: usize,
    pub timed_iters: usize,
    pub mean_s: f64,
    pub min_s: f64,
    pub bytes_moved: f64,
}

impl BenchReport {
    /// Effective bandwidth in GB/s under the bytes-moved model.
    pub fn gbps(&self) -> f64 {
        if self.mean_s > 0.0 {
            self.bytes_moved / self.mean_s / 1e9
        } else {
            0.0
        }
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{:.6e},{:.6e},{:.3}",
            self.config,
            self.strategy.token(),
            self.num_nodes,
            self.num_edges,
            self.dim,
            self.threads,
            self.kb,
            self.nb,
            self.timed_iters,
            self.mean_s,
            self.min_s,
            self.gbps()
        )
    }
}

pub fn write_csv<W: Write>(mut w: W, reports: &[BenchReport]) -> std::io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in reports {
        writeln!(w, "{}", r.csv_row())?;
    }
    Ok(())
}

/// Bytes moved per iteration: every operand read once per edge, the output
/// written once per row.
pub fn bytes_moved(
    cfg: &BrConfig,
    operands: &Operands<'_>,
    num_edges: usize,
    out_rows: usize,
    out_width: usize,
) -> f64 {
    let width = |op: Operand| operands.get(op).map_or(0, |m| m.dim());
    let reads = cfg.rhs.map_or(0, width) + width(cfg.lhs);
    (num_edges * reads * 4 + out_rows * out_width * 4) as f64
}

fn time_iters(iters: usize, warmup: usize, mut f: impl FnMut() -> Result<()>) -> Result<(f64, f64)> {
    for _ in 0..warmup {
        f()?;
    }
    let mut total = 0.0;
    let mut min = f64::INFINITY;
    for _ in 0..iters {
        let t = Instant::now();
        f()?;
        let s = t.elapsed().as_secs_f64();
        total += s;
        min = min.min(s);
    }
    // Keep min <= mean despite rounding in the sum.
    let mean = (total / iters as f64).max(min);
    Ok((mean, min))
}

/// Runs every combination in a fixed order: strategy, then threads, then kb,
/// then nb.
pub fn run_bench(graph: &LoadedGraph, opts: &BenchOptions) -> Result<Vec<BenchReport>> {
    if opts.iters == 0 {
        bail!("--iters must be at least 1");
    }
    if opts.strategies.is_empty() || opts.threads.is_empty() {
        bail!("no strategies or thread counts to run");
    }
    if opts.threads.contains(&0) {
        bail!("thread counts must be positive");
    }
    let cfg = named_config(&opts.config)?;
    let el = &graph.edges;
    let (n, m, d) = (el.num_nodes, el.num_edges(), graph.dim);
    let fu = random_features(n, d, graph.seed.wrapping_add(1));
    let fv = random_features(n, d, graph.seed.wrapping_add(2));
    let fe = random_features(m, d, graph.seed.wrapping_add(3));
    let operands = Operands::new().with_u(&fu).with_v(&fv).with_e(&fe);

    let dst = build_csr(el, Orientation::DstMajor)?;
    let src = transpose(&dst);
    let oriented = |o: Orientation| -> &CsrGraph {
        match o {
            Orientation::DstMajor => &dst,
            Orientation::SrcMajor => &src,
        }
    };
    let owner = oriented(owner_orientation(&cfg));
    let out_rows = if cfg.out == Operand::E { m } else { n };
    let out_width = cfg.binary.output_width(d, cfg.rhs.map(|_| d))?;
    let bytes = bytes_moved(&cfg, &operands, m, out_rows, out_width);
    let kbs = if opts.kb.is_empty() { vec![default_kb(d)] } else { opts.kb.clone() };
    let nbs = if opts.nb.is_empty() { vec![default_nb(owner.num_rows(), d)] } else { opts.nb.clone() };

    let mut reports = Vec::new();
    for &strategy in &opts.strategies {
        let g = oriented(preferred_orientation(strategy, &cfg));
        for &threads in &opts.threads {
            let ex = Executor::new(threads)?;
            let blocked = strategy == Strategy::BlockedPull;
            let grid: Vec<(usize, usize)> = if blocked {
                kbs.iter().flat_map(|&kb| nbs.iter().map(move |&nb| (kb, nb))).collect()
            } else {
                vec![(0, 0)]
            };
            for (kb, nb) in grid {
                let prebuilt =
                    if blocked && !opts.include_plan { Some(build_block_plan(owner, kb, nb)?) } else { None };
                // The output buffer is reused across iterations, as across epochs.
                let mut out = FeatureMatrix::zeros(out_rows, out_width);
                let (mean_s, min_s) = time_iters(opts.iters, opts.warmup, || {
                    let fresh =
                        if blocked && opts.include_plan { Some(build_block_plan(owner, kb, nb)?) } else { None };
                    let plan = prebuilt.as_ref().or(fresh.as_ref());
                    ex.binary_reduce_into(strategy, g, &cfg, &operands, plan, &mut out)?;
                    std::hint::black_box(&out);
                    Ok(())
                })?;
                reports.push(BenchReport {
                    config: opts.config.clone(),
                    strategy,
                    num_nodes: n,
                    num_edges: m,
                    dim: d,
                    threads,
                    kb,
                    nb,
                    warmup_iters: opts.warmup,
                    timed_iters: opts.iters,
                    mean_s,
                    min_s,
                    bytes_moved: bytes,
                });
            }
        }
    }
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bandwidth_model() {
        let (u, e) = (FeatureMatrix::zeros(5, 8), FeatureMatrix::zeros(7, 1));
        let ops = Operands::new().with_u(&u).with_e(&e);
        let copy = named_config("u_copy_add_v").unwrap();
        assert_eq!(bytes_moved(&copy, &ops, 7, 5, 8), (7 * 8 * 4 + 5 * 8 * 4) as f64);
        let mul = named_config("u_mul_e_add_v").unwrap();
        assert_eq!(bytes_moved(&mul, &ops, 7, 5, 8), (7 * 9 * 4 + 5 * 8 * 4) as f64);
    }
}
