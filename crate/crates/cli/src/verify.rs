use std::fmt::Write as _;

use anyhow::{bail, Result};
use graph_aggr::kernels::owner_orientation;
use graph_aggr::oracle::{compare, oracle_aggregate_detailed, Comparison};
use graph_aggr::{
    build_block_plan, build_csr, named_config, random_features, transpose, BrConfig, Executor, Operands, Orientation,
    Strategy,
};

use crate::LoadedGraph;

pub const REL_TOL: f64 = 1e-5;

#[derive(Debug, Clone)]
pub struct VerifyOptions {
    pub configs: Vec<String>,
    pub strategies: Vec<Strategy>,
    pub threads: usize,
    /// Test hook: perturb one output element of the first case.
    pub inject_fault: bool,
}

#[derive(Debug, Clone)]
pub struct CaseResult {
    pub config: String,
    pub strategy: Strategy,
    pub comparison: Comparison,
}

#[derive(Debug, Clone)]
pub struct VerifySummary {
    pub cases: Vec<CaseResult>,
    pub configs: usize,
    pub strategies: usize,
}

impl VerifySummary {
    pub fn passed(&self) -> bool {
        self.cases.iter().all(|c| c.comparison.passed())
    }

    pub fn configs_passed(&self) -> usize {
        let mut names: Vec<&str> = self.cases.iter().map(|c| c.config.as_str()).collect();
        names.dedup();
        names.iter().filter(|n| self.cases.iter().filter(|c| c.config == **n).all(|c| c.comparison.passed())).count()
    }

    pub fn report(&self) -> String {
        let mut s = String::new();
        for c in &self.cases {
            let cmp = &c.comparison;
            let verdict = if cmp.passed() { "ok" } else { "MISMATCH" };
            let mode = if cmp.exact { "exact" } else { "rel" };
            writeln!(
                s,
                "{:<18} {:<8} max_rel_err={:.3e} ({mode}) {verdict}",
                c.config,
                c.strategy.token(),
                cmp.max_rel_err
            )
            .unwrap();
        }
        let tag = if self.passed() { "PASS" } else { "FAIL" };
        write!(s, "{tag} {}/{} configs × {} strategies", self.configs_passed(), self.configs, self.strategies).unwrap();
        s
    }
}

pub fn run_verify(graph: &LoadedGraph, opts: &VerifyOptions) -> Result<VerifySummary> {
    if opts.configs.is_empty() || opts.strategies.is_empty() {
        bail!("nothing to verify");
    }
    let configs: Vec<(String, BrConfig)> =
        opts.configs.iter().map(|n| Ok((n.clone(), named_config(n)?))).collect::<Result<_>>()?;
    let el = &graph.edges;
    let (n, m, d, seed) = (el.num_nodes, el.num_edges(), graph.dim, graph.seed);
    let fu = random_features(n, d, seed.wrapping_add(1));
    let fv = random_features(n, d, seed.wrapping_add(2));
    let fe = random_features(m, d, seed.wrapping_add(3));
    let operands = Operands::new().with_u(&fu).with_v(&fv).with_e(&fe);
    let ex = Executor::new(opts.threads)?;
    let dst = build_csr(el, Orientation::DstMajor)?;
    let src = transpose(&dst);

    let mut cases = Vec::new();
    let mut fault_pending = opts.inject_fault;
    for (name, cfg) in &configs {
        let want = oracle_aggregate_detailed(el, cfg, &operands)?;
        let owner = if owner_orientation(cfg) == Orientation::DstMajor { &dst } else { &src };
        let plan = build_block_plan(owner, graph_aggr::kernels::plan::default_kb(d), 8)?;
        for &s in &opts.strategies {
            let mut got = ex.binary_reduce(s, owner, cfg, &operands, Some(&plan))?;
            let mut comparison = compare(&got, &want, cfg, REL_TOL);
            if std::mem::take(&mut fault_pending) {
                match got.as_mut_slice().first_mut() {
                    Some(x) => {
                        *x += 1.0;
                        comparison = compare(&got, &want, cfg, REL_TOL);
                    }
                    None => comparison.mismatches += 1,
                }
            }
            cases.push(CaseResult { config: name.clone(), strategy: s, comparison });
        }
    }
    Ok(VerifySummary { cases, configs: configs.len(), strategies: opts.strategies.len() })
}
