//! Copy-Reduce and Binary-Reduce kernels.
//!
//! All entry points live on [`Executor`], which owns the worker pool. A
//! kernel call validates its operands, picks the CSR orientation its strategy
//! needs (transposing the given graph only if it has the other one), and
//! returns once the output is complete.
//!
//! Node outputs with no incident edge are zero whatever the reduce operator.

use std::borrow::Cow;
use std::fmt;

use crate::feature::{FeatureMatrix, ReduceOp};
use crate::graph::{transpose, CsrGraph, Orientation};
use crate::{Error, Result};

mod blocked;
mod config;
pub(crate) mod job;
pub mod plan;
mod pull;
mod push;
mod spmm;

pub use config::{builtin_configs, named_config, BrConfig, Operand, APPLICATION_CONFIGS, BR_LAYOUTS};
pub use plan::{build_block_plan, BlockPlan};
pub use push::LOCK_STRIPES;

use job::Job;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    /// Parallel over source rows with per-destination locking.
    Push,
    /// Parallel over destination rows, lock-free.
    Pull,
    /// Pull over a [`BlockPlan`]: blocked sources, sorted gathers, column panels.
    BlockedPull,
    /// Fused unblocked row-parallel sparse-dense product.
    RowParallelSpmm,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [Strategy::Push, Strategy::Pull, Strategy::BlockedPull, Strategy::RowParallelSpmm];

    pub fn token(self) -> &'static str {
        match self {
            Strategy::Push => "push",
            Strategy::Pull => "pull",
            Strategy::BlockedPull => "blocked",
            Strategy::RowParallelSpmm => "spmm",
        }
    }

    pub fn from_token(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|st| st.token() == s)
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

/// Feature matrices for the three operand kinds. Source and destination
/// features are both indexed by node id; they may be the same matrix.
#[derive(Debug, Clone, Copy, Default)]
pub struct Operands<'a> {
    pub u: Option<&'a FeatureMatrix>,
    pub v: Option<&'a FeatureMatrix>,
    pub e: Option<&'a FeatureMatrix>,
}

impl<'a> Operands<'a> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_u(mut self, m: &'a FeatureMatrix) -> Self {
        self.u = Some(m);
        self
    }

    pub fn with_v(mut self, m: &'a FeatureMatrix) -> Self {
        self.v = Some(m);
        self
    }

    pub fn with_e(mut self, m: &'a FeatureMatrix) -> Self {
        self.e = Some(m);
        self
    }

    pub fn get(&self, op: Operand) -> Option<&'a FeatureMatrix> {
        match op {
            Operand::U => self.u,
            Operand::V => self.v,
            Operand::E => self.e,
        }
    }
}

/// Orientation whose rows are the output entities of `cfg`. Edge outputs use
/// the destination-major traversal.
pub fn owner_orientation(cfg: &BrConfig) -> Orientation {
    match cfg.out {
        Operand::U => Orientation::SrcMajor,
        Operand::V | Operand::E => Orientation::DstMajor,
    }
}

/// Orientation the graph should already have for `strategy` to avoid a
/// transpose inside the kernel call.
pub fn preferred_orientation(strategy: Strategy, cfg: &BrConfig) -> Orientation {
    let owner = owner_orientation(cfg);
    match (strategy, cfg.out) {
        (Strategy::Push, Operand::E) => Orientation::SrcMajor,
        (Strategy::Push, _) => owner.flipped(),
        _ => owner,
    }
}

/// Checks operand presence and shapes; returns the job and output row count.
pub(crate) fn prepare<'a>(
    num_nodes: usize,
    num_edges: usize,
    cfg: &BrConfig,
    operands: &Operands<'a>,
) -> Result<(Job<'a>, usize)> {
    cfg.check()?;
    let rows_for = |op: Operand| if op.is_node() { num_nodes } else { num_edges };
    let fetch = |op: Operand| -> Result<&'a FeatureMatrix> {
        let m = operands.get(op).ok_or(Error::MissingOperand(op))?;
        if m.rows() != rows_for(op) {
            return Err(Error::Shape(format!("operand {op} has {} rows, expected {}", m.rows(), rows_for(op))));
        }
        Ok(m)
    };
    let lhs = fetch(cfg.lhs)?;
    let rhs = cfg.rhs.map(fetch).transpose()?;
    let width = cfg.binary.output_width(lhs.dim(), rhs.map(FeatureMatrix::dim))?;
    Ok((Job::new(*cfg, lhs, rhs, width), rows_for(cfg.out)))
}

fn oriented(g: &CsrGraph, orientation: Orientation) -> Cow<'_, CsrGraph> {
    if g.orientation() == orientation {
        Cow::Borrowed(g)
    } else {
        Cow::Owned(transpose(g))
    }
}

/// Worker pool plus the kernel entry points.
pub struct Executor {
    pool: rayon::ThreadPool,
    threads: usize,
}

impl Executor {
    /// Pool with `threads` workers; 0 means the available parallelism.
    pub fn new(threads: usize) -> Result<Self> {
        let threads = if threads == 0 { std::thread::available_parallelism().map_or(1, |n| n.get()) } else { threads };
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .thread_name(|i| format!("graph-aggr-{i}"))
            .build()
            .map_err(|e| Error::Config(format!("cannot start {threads} worker threads: {e}")))?;
        Ok(Executor { pool, threads })
    }

    pub fn threads(&self) -> usize {
        self.threads
    }

    /// Runs `f` inside the worker pool.
    pub fn install<T: Send>(&self, f: impl FnOnce() -> T + Send) -> T {
        self.pool.install(f)
    }

    /// Copy-Reduce of `source` features (`U` for nodes, `E` for edges) into
    /// destination nodes.
    pub fn copy_reduce(
        &self,
        strategy: Strategy,
        g: &CsrGraph,
        source: Operand,
        feats: &FeatureMatrix,
        reduce: ReduceOp,
        plan: Option<&BlockPlan>,
    ) -> Result<FeatureMatrix> {
        if source == Operand::V {
            return Err(Error::Config("copy source must be u or e".into()));
        }
        let cfg = BrConfig::copy(source, reduce);
        let operands = match source {
            Operand::E => Operands::new().with_e(feats),
            _ => Operands::new().with_u(feats),
        };
        self.binary_reduce(strategy, g, &cfg, &operands, plan)
    }

    /// Binary-Reduce: on every edge `(u -> v, e)` computes the message
    /// `lhs binary rhs` and reduces it into the `cfg.out` entity.
    pub fn binary_reduce(
        &self,
        strategy: Strategy,
        g: &CsrGraph,
        cfg: &BrConfig,
        operands: &Operands<'_>,
        plan: Option<&BlockPlan>,
    ) -> Result<FeatureMatrix> {
        let mut out = FeatureMatrix::zeros(0, 1);
        self.binary_reduce_into(strategy, g, cfg, operands, plan, &mut out)?;
        Ok(out)
    }

    /// As [`Executor::binary_reduce`], writing into `out`. Its previous
    /// contents are ignored; it is reallocated only if the shape differs, so
    /// repeated calls can reuse one buffer.
    pub fn binary_reduce_into(
        &self,
        strategy: Strategy,
        g: &CsrGraph,
        cfg: &BrConfig,
        operands: &Operands<'_>,
        plan: Option<&BlockPlan>,
        out: &mut FeatureMatrix,
    ) -> Result<()> {
        if g.num_rows() != g.num_cols() {
            return Err(Error::Shape(format!("adjacency is {} x {}, expected square", g.num_rows(), g.num_cols())));
        }
        let (job, out_rows) = prepare(g.num_nodes(), g.num_edges(), cfg, operands)?;
        if out.rows() != out_rows || out.dim() != job.width {
            *out = FeatureMatrix::zeros(out_rows, job.width);
        }
        let out = out.as_mut_slice();
        let owner = owner_orientation(cfg);
        let edges_out = cfg.out == Operand::E;

        match strategy {
            Strategy::BlockedPull => {
                let plan = plan.ok_or_else(|| Error::Plan("blocked pull needs a block plan".into()))?;
                if plan.orientation() != owner || plan.num_rows() != g.num_nodes() || plan.num_edges() != g.num_edges()
                {
                    return Err(Error::Plan(format!(
                        "plan ({:?}, {} rows, {} edges) does not fit {cfg} on a graph with {} nodes and {} edges",
                        plan.orientation(),
                        plan.num_rows(),
                        plan.num_edges(),
                        g.num_nodes(),
                        g.num_edges()
                    )));
                }
                self.pool.install(|| {
                    if edges_out {
                        blocked::store_edges(plan, &job, out)
                    } else {
                        blocked::reduce_nodes(plan, &job, out)
                    }
                });
            }
            _ => {
                let g = oriented(g, preferred_orientation(strategy, cfg));
                self.pool.install(|| match (strategy, edges_out) {
                    (Strategy::Push | Strategy::Pull, true) => pull::store_edges(&g, &job, out),
                    (Strategy::Push, false) => push::reduce_nodes(&g, &job, out),
                    (Strategy::Pull, false) => pull::reduce_nodes(&g, &job, out),
                    (Strategy::RowParallelSpmm, true) => spmm::store_edges(&g, &job, out),
                    (Strategy::RowParallelSpmm, false) => spmm::reduce_nodes(&g, &job, out),
                    (Strategy::BlockedPull, _) => unreachable!(),
                });
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_csr, EdgeList};

    fn graph(n: usize, edges: Vec<(crate::Idx, crate::Idx)>) -> CsrGraph {
        build_csr(&EdgeList::new(n, edges).unwrap(), Orientation::DstMajor).unwrap()
    }

    fn run_all(g: &CsrGraph, cfg: &BrConfig, ops: &Operands<'_>, mut check: impl FnMut(Strategy, FeatureMatrix)) {
        let ex = Executor::new(2).unwrap();
        let plan_graph = oriented(g, owner_orientation(cfg));
        let plan = build_block_plan(&plan_graph, 1, 1).unwrap();
        for s in Strategy::ALL {
            check(s, ex.binary_reduce(s, g, cfg, ops, Some(&plan)).unwrap());
        }
    }

    #[test]
    fn copy_sum_two_in_edges() {
        let g = graph(3, vec![(0, 2), (1, 2)]);
        let f = FeatureMatrix::from_rows(&[[1.0f32, 2.0], [3.0, 4.0], [9.0, 9.0]]).unwrap();
        run_all(&g, &BrConfig::copy(Operand::U, ReduceOp::Sum), &Operands::new().with_u(&f), |s, out| {
            assert_eq!(out.as_slice(), &[0., 0., 0., 0., 4., 6.], "{s}");
        });
    }

    #[test]
    fn copy_single_edge_is_the_source_row() {
        let g = graph(2, vec![(1, 0)]);
        let f = FeatureMatrix::from_rows(&[[0.0f32, 0.0], [2.5, -1.0]]).unwrap();
        run_all(&g, &BrConfig::copy(Operand::U, ReduceOp::Sum), &Operands::new().with_u(&f), |s, out| {
            assert_eq!(out.row(0), &[2.5, -1.0], "{s}");
        });
    }

    #[test]
    fn copy_max() {
        let g = graph(3, vec![(0, 1), (2, 1)]);
        let f = FeatureMatrix::from_rows(&[[5.0f32], [-100.0], [2.0]]).unwrap();
        run_all(&g, &BrConfig::copy(Operand::U, ReduceOp::Max), &Operands::new().with_u(&f), |s, out| {
            assert_eq!(out.as_slice(), &[0., 5., 0.], "{s}");
        });
    }

    #[test]
    fn u_mul_e_add_v_single_edge() {
        let g = graph(2, vec![(0, 1)]);
        let fu = FeatureMatrix::from_rows(&[[2.0f32, 3.0], [0.0, 0.0]]).unwrap();
        let fe = FeatureMatrix::from_rows(&[[10.0f32, 10.0]]).unwrap();
        let cfg = named_config("u_mul_e_add_v").unwrap();
        run_all(&g, &cfg, &Operands::new().with_u(&fu).with_e(&fe), |s, out| {
            assert_eq!(out.row(1), &[20.0, 30.0], "{s}");
        });
    }

    #[test]
    fn u_dot_v_add_e() {
        let g = graph(2, vec![(0, 1)]);
        let f = FeatureMatrix::from_rows(&[[1.0f32, 2.0], [3.0, 4.0]]).unwrap();
        let cfg = named_config("u_dot_v_add_e").unwrap();
        run_all(&g, &cfg, &Operands::new().with_u(&f).with_v(&f), |s, out| {
            assert_eq!((out.rows(), out.dim()), (1, 1));
            assert_eq!(out.as_slice(), &[11.0], "{s}");
        });
    }

    #[test]
    fn u_add_v_copy_e() {
        let g = graph(2, vec![(0, 1)]);
        let f = FeatureMatrix::from_rows(&[[1.0f32], [5.0]]).unwrap();
        let cfg = named_config("u_add_v_copy_e").unwrap();
        run_all(&g, &cfg, &Operands::new().with_u(&f).with_v(&f), |s, out| {
            assert_eq!(out.as_slice(), &[6.0], "{s}");
        });
    }

    #[test]
    fn e_copy_max_v() {
        let g = graph(3, vec![(0, 2), (1, 2)]);
        let fe = FeatureMatrix::from_rows(&[[3.0f32], [7.0]]).unwrap();
        let cfg = named_config("e_copy_max_v").unwrap();
        run_all(&g, &cfg, &Operands::new().with_e(&fe), |s, out| {
            assert_eq!(out.as_slice(), &[0.0, 0.0, 7.0], "{s}");
        });
    }

    #[test]
    fn source_node_output() {
        // Out-degree aggregation: u_sub_v_add_u sums (F_u - F_v) over out-edges.
        let g = graph(3, vec![(0, 1), (0, 2), (2, 1)]);
        let f = FeatureMatrix::from_rows(&[[10.0f32], [1.0], [4.0]]).unwrap();
        let cfg = named_config("u_sub_v_add_u").unwrap();
        run_all(&g, &cfg, &Operands::new().with_u(&f).with_v(&f), |s, out| {
            assert_eq!(out.as_slice(), &[15.0, 0.0, 3.0], "{s}");
        });
    }

    #[test]
    fn copy_last_takes_canonical_last_edge() {
        // Destination 2 row order: (src 0, e1), (src 1, e0), (src 1, e2).
        let g = graph(3, vec![(1, 2), (0, 2), (1, 2)]);
        let fe = FeatureMatrix::from_rows(&[[1.0f32], [2.0], [3.0]]).unwrap();
        let cfg = BrConfig::copy(Operand::E, ReduceOp::CopyLast);
        run_all(&g, &cfg, &Operands::new().with_e(&fe), |s, out| {
            assert_eq!(out.as_slice(), &[0.0, 0.0, 3.0], "{s}");
        });
    }

    #[test]
    fn errors() {
        let g = graph(2, vec![(0, 1)]);
        let f = FeatureMatrix::zeros(2, 2);
        let ex = Executor::new(1).unwrap();
        let cfg = named_config("u_mul_e_add_v").unwrap();
        let ops = Operands::new().with_u(&f);
        assert!(matches!(
            ex.binary_reduce(Strategy::Pull, &g, &cfg, &ops, None),
            Err(Error::MissingOperand(Operand::E))
        ));
        let bad = FeatureMatrix::zeros(3, 2);
        assert!(matches!(
            ex.copy_reduce(Strategy::Pull, &g, Operand::U, &bad, ReduceOp::Sum, None),
            Err(Error::Shape(_))
        ));
        let fe = FeatureMatrix::zeros(1, 3);
        assert!(matches!(ex.binary_reduce(Strategy::Pull, &g, &cfg, &ops.with_e(&fe), None), Err(Error::Shape(_))));
        assert!(matches!(
            ex.copy_reduce(Strategy::BlockedPull, &g, Operand::U, &f, ReduceOp::Sum, None),
            Err(Error::Plan(_))
        ));
        let wrong = build_block_plan(&transpose(&g), 1, 1).unwrap();
        assert!(matches!(
            ex.copy_reduce(Strategy::BlockedPull, &g, Operand::U, &f, ReduceOp::Sum, Some(&wrong)),
            Err(Error::Plan(_))
        ));
    }
}
