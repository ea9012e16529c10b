#![allow(dead_code)]

use graph_aggr::gen::{EdgeCount, GeneratorKind, RMAT_DEFAULT};
use graph_aggr::kernels::owner_orientation;
use graph_aggr::oracle::{compare, oracle_aggregate_detailed, Comparison};
use graph_aggr::{
    build_block_plan, build_csr, generate, random_features, transpose, BrConfig, CsrGraph, EdgeList, Executor,
    FeatureMatrix, GeneratorSpec, Operand, Operands, Orientation, Strategy,
};

pub const REL_TOL: f64 = 1e-5;

/// Feature matrices for every operand kind; `narrow` operands get width 1.
pub struct Feats {
    pub u: FeatureMatrix,
    pub v: FeatureMatrix,
    pub e: FeatureMatrix,
}

impl Feats {
    pub fn new(el: &EdgeList, dim: usize, narrow: Option<Operand>, seed: u64) -> Self {
        let width = |op| if narrow == Some(op) { 1 } else { dim };
        Feats {
            u: random_features(el.num_nodes, width(Operand::U), seed),
            v: random_features(el.num_nodes, width(Operand::V), seed ^ 0x55),
            e: random_features(el.num_edges(), width(Operand::E), seed ^ 0xaa),
        }
    }

    pub fn map(&self, f: impl Fn(f32) -> f32) -> Self {
        let m = |x: &FeatureMatrix| {
            FeatureMatrix::new(x.rows(), x.dim(), x.as_slice().iter().map(|&v| f(v)).collect()).unwrap()
        };
        Feats { u: m(&self.u), v: m(&self.v), e: m(&self.e) }
    }

    pub fn operands(&self) -> Operands<'_> {
        Operands::new().with_u(&self.u).with_v(&self.v).with_e(&self.e)
    }
}

/// Random multigraph with `n` in 1..=max_n and `m` in 0..=max_m, cycling
/// through generator kinds.
pub fn random_graph(seed: u64, max_n: usize, max_m: usize) -> EdgeList {
    let mut x = seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(0x632b_e59b_d9b4_e019);
    let mut next = || {
        x ^= x >> 31;
        x = x.wrapping_mul(0xbf58_476d_1ce4_e5b9);
        x ^= x >> 29;
        x
    };
    let n = 1 + (next() % max_n as u64) as usize;
    let m = (next() % (max_m as u64 + 1)) as usize;
    let kind = match seed % 3 {
        0 => GeneratorKind::Rmat { num_edges: m, abcd: RMAT_DEFAULT },
        1 if n >= 2 => GeneratorKind::ErdosRenyi { edges: EdgeCount::Exact(m) },
        _ => GeneratorKind::Rmat { num_edges: m, abcd: [0.25; 4] },
    };
    generate(&GeneratorSpec { kind, num_nodes: n, seed }).unwrap()
}

/// Runs `cfg` under every strategy and compares with the oracle.
pub fn check_all_strategies(
    ex: &Executor,
    el: &EdgeList,
    cfg: &BrConfig,
    feats: &Feats,
    kb: usize,
    nb: usize,
) -> Vec<(Strategy, Comparison)> {
    let want = oracle_aggregate_detailed(el, cfg, &feats.operands()).unwrap();
    let dst = build_csr(el, Orientation::DstMajor).unwrap();
    let owner = owner_orientation(cfg);
    let plan_graph = if owner == Orientation::DstMajor { dst.clone() } else { transpose(&dst) };
    let plan = build_block_plan(&plan_graph, kb, nb).unwrap();
    Strategy::ALL
        .into_iter()
        .map(|s| {
            let got = ex.binary_reduce(s, &dst, cfg, &feats.operands(), Some(&plan)).unwrap();
            (s, compare(&got, &want, cfg, REL_TOL))
        })
        .collect()
}

pub fn run(
    ex: &Executor,
    s: Strategy,
    g: &CsrGraph,
    cfg: &BrConfig,
    feats: &Feats,
    kb: usize,
    nb: usize,
) -> FeatureMatrix {
    let owner = owner_orientation(cfg);
    let plan_graph = if g.orientation() == owner { g.clone() } else { transpose(g) };
    let plan = build_block_plan(&plan_graph, kb, nb).unwrap();
    ex.binary_reduce(s, g, cfg, &feats.operands(), Some(&plan)).unwrap()
}

pub fn max_rel_diff(a: &FeatureMatrix, b: &FeatureMatrix) -> f64 {
    assert_eq!((a.rows(), a.dim()), (b.rows(), b.dim()));
    a.as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(&x, &y)| graph_aggr::oracle::relative_error(x, y, y.abs().max(1.0)))
        .fold(0.0, f64::max)
}
