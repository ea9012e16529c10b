//! Serial reference aggregation.
//!
//! Walks the edge list in edge-id order and applies the message and reduce
//! definitions directly, with no CSR, no blocking and no threads. Sums and
//! products accumulate in `f64` so kernels are checked against a strictly
//! more precise result.

use crate::feature::{apply_binary, FeatureMatrix, ReduceOp};
use crate::graph::EdgeList;
use crate::kernels::{prepare, BrConfig, Operand, Operands};
use crate::{Error, Idx, Result};

/// Largest edge count the oracle accepts.
pub const ORACLE_EDGE_LIMIT: usize = 1_000_000;

/// Reference values plus, per element, the scale used for relative error:
/// the sum of message magnitudes for `Sum` outputs and the magnitude of the
/// value itself otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleOutput {
    pub values: FeatureMatrix,
    pub scale: FeatureMatrix,
}

pub fn oracle_aggregate(edges: &EdgeList, cfg: &BrConfig, operands: &Operands<'_>) -> Result<FeatureMatrix> {
    oracle_aggregate_detailed(edges, cfg, operands).map(|o| o.values)
}

pub fn oracle_aggregate_detailed(edges: &EdgeList, cfg: &BrConfig, operands: &Operands<'_>) -> Result<OracleOutput> {
    edges.check()?;
    if edges.num_edges() > ORACLE_EDGE_LIMIT {
        return Err(Error::OracleGuard { edges: edges.num_edges(), limit: ORACLE_EDGE_LIMIT });
    }
    let (job, out_rows) = prepare(edges.num_nodes, edges.num_edges(), cfg, operands)?;
    let w = job.width;
    let row_of = |op: Operand, s: usize, d: usize, e: usize| match op {
        Operand::U => s,
        Operand::V => d,
        Operand::E => e,
    };
    let message = |s: usize, d: usize, e: usize| -> Vec<f32> {
        let lhs = operands.get(cfg.lhs).unwrap().row(row_of(cfg.lhs, s, d, e));
        let rhs = cfg.rhs.map(|op| operands.get(op).unwrap().row(row_of(op, s, d, e)));
        apply_binary(cfg.binary, lhs, rhs).expect("operand widths checked by prepare")
    };

    if cfg.out == Operand::E {
        let mut values = Vec::with_capacity(out_rows * w);
        for (e, &(s, d)) in edges.edges.iter().enumerate() {
            values.extend(message(s as usize, d as usize, e));
        }
        let scale = values.iter().map(|x| x.abs()).collect();
        return Ok(OracleOutput {
            values: FeatureMatrix::new(out_rows, w, values)?,
            scale: FeatureMatrix::new(out_rows, w, scale)?,
        });
    }

    let reduce = cfg.reduce;
    let mut acc = vec![reduce.identity() as f64; out_rows * w];
    let mut magnitude = vec![0.0f64; out_rows * w];
    let mut touched = vec![false; out_rows];
    // (other endpoint, edge id) of the message currently held, for CopyLast.
    let mut winner: Vec<Option<(Idx, Idx)>> = vec![None; out_rows];

    for (e, &(s, d)) in edges.edges.iter().enumerate() {
        let (owner, other) = match cfg.out {
            Operand::V => (d as usize, s),
            _ => (s as usize, d),
        };
        let m = message(s as usize, d as usize, e);
        touched[owner] = true;
        let row = &mut acc[owner * w..(owner + 1) * w];
        let mag = &mut magnitude[owner * w..(owner + 1) * w];
        match reduce {
            ReduceOp::Sum => {
                for ((a, g), &x) in row.iter_mut().zip(mag.iter_mut()).zip(&m) {
                    *a += x as f64;
                    *g += x.abs() as f64;
                }
            }
            ReduceOp::Prod => {
                for (a, &x) in row.iter_mut().zip(&m) {
                    *a *= x as f64;
                }
            }
            ReduceOp::Max => {
                for (a, &x) in row.iter_mut().zip(&m) {
                    if (x as f64) > *a {
                        *a = x as f64;
                    }
                }
            }
            ReduceOp::Min => {
                for (a, &x) in row.iter_mut().zip(&m) {
                    if (x as f64) < *a {
                        *a = x as f64;
                    }
                }
            }
            ReduceOp::CopyLast => {
                let key = (other, e as Idx);
                if winner[owner].is_none_or(|k| key > k) {
                    winner[owner] = Some(key);
                    for (a, &x) in row.iter_mut().zip(&m) {
                        *a = x as f64;
                    }
                }
            }
        }
    }

    let mut values = Vec::with_capacity(acc.len());
    let mut scale = Vec::with_capacity(acc.len());
    for (r, t) in touched.iter().enumerate() {
        for j in r * w..(r + 1) * w {
            let v = if *t { acc[j] as f32 } else { 0.0 };
            values.push(v);
            scale.push(if reduce == ReduceOp::Sum { magnitude[j] as f32 } else { v.abs() });
        }
    }
    Ok(OracleOutput {
        values: FeatureMatrix::new(out_rows, w, values)?,
        scale: FeatureMatrix::new(out_rows, w, scale)?,
    })
}

/// Relative error of one element against a reference with error scale
/// `scale`. Matching NaNs and matching infinities count as exact.
pub fn relative_error(got: f32, want: f32, scale: f32) -> f64 {
    if got == want || (got.is_nan() && want.is_nan()) {
        return 0.0;
    }
    if !got.is_finite() || !want.is_finite() {
        return f64::INFINITY;
    }
    let denom = (want.abs() as f64).max(scale as f64).max(f32::MIN_POSITIVE as f64);
    (got as f64 - want as f64).abs() / denom
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Comparison {
    pub max_rel_err: f64,
    pub mismatches: usize,
    pub exact: bool,
}

impl Comparison {
    pub fn passed(&self) -> bool {
        self.mismatches == 0
    }
}

/// Compares kernel output with the oracle. Max, Min, CopyLast and edge
/// outputs must match exactly; Sum and Prod within `rel_tol`.
pub fn compare(got: &FeatureMatrix, want: &OracleOutput, cfg: &BrConfig, rel_tol: f64) -> Comparison {
    let exact = cfg.reduce.is_order_exact() || cfg.out == Operand::E;
    if got.rows() != want.values.rows() || got.dim() != want.values.dim() {
        return Comparison { max_rel_err: f64::INFINITY, mismatches: got.as_slice().len().max(1), exact };
    }
    let mut max_rel_err = 0.0f64;
    let mut mismatches = 0;
    for ((&g, &w), &s) in got.as_slice().iter().zip(want.values.as_slice()).zip(want.scale.as_slice()) {
        let err = relative_error(g, w, s);
        max_rel_err = max_rel_err.max(err);
        let ok = if exact { err == 0.0 } else { err <= rel_tol };
        if !ok {
            mismatches += 1;
        }
    }
    Comparison { max_rel_err, mismatches, exact }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::named_config;

    #[test]
    fn copy_sum_by_hand() {
        let el = EdgeList::new(3, vec![(0, 2), (1, 2)]).unwrap();
        let f = FeatureMatrix::from_rows(&[[1.0f32, 2.0], [3.0, 4.0], [0.0, 0.0]]).unwrap();
        let out = oracle_aggregate(&el, &named_config("u_copy_add_v").unwrap(), &Operands::new().with_u(&f)).unwrap();
        assert_eq!(out.as_slice(), &[0., 0., 0., 0., 4., 6.]);
    }

    #[test]
    fn empty_graph_is_zero() {
        let el = EdgeList::new(4, vec![]).unwrap();
        let f = FeatureMatrix::filled(4, 3, 1.0);
        for name in ["u_copy_max_v", "u_copy_mul_v", "u_copy_min_v"] {
            let out = oracle_aggregate(&el, &named_config(name).unwrap(), &Operands::new().with_u(&f)).unwrap();
            assert_eq!(out, FeatureMatrix::zeros(4, 3));
        }
    }

    #[test]
    fn single_edge_mul_add() {
        let el = EdgeList::new(2, vec![(0, 1)]).unwrap();
        let fu = FeatureMatrix::from_rows(&[[2.0f32, 3.0], [0.0, 0.0]]).unwrap();
        let fe = FeatureMatrix::from_rows(&[[10.0f32, 10.0]]).unwrap();
        let cfg = named_config("u_mul_e_add_v").unwrap();
        let out = oracle_aggregate(&el, &cfg, &Operands::new().with_u(&fu).with_e(&fe)).unwrap();
        assert_eq!(out.row(1), &[20.0, 30.0]);
    }

    #[test]
    fn copy_last_uses_destination_order() {
        // Edge 0 (1->2) arrives first but (src 1, e2) is last in row 2.
        let el = EdgeList::new(3, vec![(1, 2), (0, 2), (1, 2), (0, 2)]).unwrap();
        let fe = FeatureMatrix::from_rows(&[[1.0f32], [2.0], [3.0], [4.0]]).unwrap();
        let cfg = BrConfig::copy(Operand::E, ReduceOp::CopyLast);
        let out = oracle_aggregate(&el, &cfg, &Operands::new().with_e(&fe)).unwrap();
        assert_eq!(out.as_slice(), &[0.0, 0.0, 3.0]);
    }

    #[test]
    fn sum_scale_tracks_cancellation() {
        let el = EdgeList::new(2, vec![(0, 1), (1, 1)]).unwrap();
        let f = FeatureMatrix::from_rows(&[[1.0f32], [-1.0]]).unwrap();
        let out = oracle_aggregate_detailed(&el, &named_config("u_copy_add_v").unwrap(), &Operands::new().with_u(&f))
            .unwrap();
        assert_eq!(out.values.row(1), &[0.0]);
        assert_eq!(out.scale.row(1), &[2.0]);
    }

    #[test]
    fn guard_and_errors() {
        let el = EdgeList { num_nodes: 1, edges: vec![(0, 0); ORACLE_EDGE_LIMIT + 1] };
        let f = FeatureMatrix::zeros(1, 1);
        let cfg = named_config("u_copy_add_v").unwrap();
        assert!(matches!(oracle_aggregate(&el, &cfg, &Operands::new().with_u(&f)), Err(Error::OracleGuard { .. })));
        let el = EdgeList::new(1, vec![(0, 0)]).unwrap();
        assert!(matches!(oracle_aggregate(&el, &cfg, &Operands::new()), Err(Error::MissingOperand(Operand::U))));
    }

    #[test]
    fn relative_error_cases() {
        assert_eq!(relative_error(1.0, 1.0, 1.0), 0.0);
        assert_eq!(relative_error(f32::NAN, f32::NAN, 0.0), 0.0);
        assert_eq!(relative_error(f32::INFINITY, f32::INFINITY, 0.0), 0.0);
        assert_eq!(relative_error(1.0, f32::INFINITY, 0.0), f64::INFINITY);
        assert!((relative_error(1.5, 1.0, 0.0) - 0.5).abs() < 1e-12);
        assert!((relative_error(1e-3, 0.0, 2.0) - 5e-4).abs() < 1e-9);
    }
}
