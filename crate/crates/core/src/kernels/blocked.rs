//! Blocked, sorted pull driven by a [`BlockPlan`].
//!
//! Loop order: output column panels of `nb`, then source blocks of `kb`,
//! then destination tiles in parallel. Every thread works on the same source
//! block at the same time and reads its feature rows in ascending order.

use rayon::prelude::*;

use crate::feature::{apply_binary_into, BinaryOp};
use crate::Idx;

use super::job::{accumulate, endpoints, ix, vectorized, window, with_reducer, CopyFrom, Job, Reducer, SharedSlice};
use super::plan::BlockPlan;

fn panels(width: usize, nb: usize) -> impl Iterator<Item = (usize, usize)> {
    let nb = nb.min(width).max(1);
    (0..width).step_by(nb).map(move |c0| (c0, (c0 + nb).min(width)))
}

fn block_is_empty(plan: &BlockPlan, b: usize) -> bool {
    (0..plan.num_tiles()).all(|t| plan.segment(b, t).is_empty())
}

/// Reduces `src[keys[i]]` into tile row `rows[i] - base` for every entry of a
/// segment, restricted to columns `c0..c1`.
#[inline(always)]
#[allow(clippy::too_many_arguments)]
fn copy_segment<R: Reducer>(
    tile: &mut [f32],
    base: usize,
    w: usize,
    c0: usize,
    c1: usize,
    rows: &[Idx],
    keys: &[Idx],
    src: &[f32],
) {
    for (&r, &k) in rows.iter().zip(keys) {
        let off = (ix(r) - base) * w;
        let k = ix(k) * w;
        accumulate::<R>(&mut tile[off + c0..off + c1], &src[k + c0..k + c1]);
    }
}

pub(crate) fn reduce_nodes(plan: &BlockPlan, job: &Job<'_>, out: &mut [f32]) {
    let w = job.width;
    let identity = job.cfg.reduce.identity();
    let tile_rows = plan.tile_rows();
    let orientation = plan.orientation();

    out.par_chunks_mut(w).enumerate().with_min_len(256).for_each(|(r, acc)| {
        acc.fill(if plan.row_degree(r) > 0 { identity } else { 0.0 });
    });
    let blocks: Vec<usize> = (0..plan.num_blocks()).filter(|&b| !block_is_empty(plan, b)).collect();

    let copy = job.copy_source(orientation);
    with_reducer!(job.cfg.reduce, R => {
        for (c0, c1) in panels(w, plan.nb()) {
            for &b in &blocks {
                out.par_chunks_mut(tile_rows * w).enumerate().for_each(|(t, tile)| {
                    let seg = plan.segment(b, t);
                    let base = t * tile_rows;
                    vectorized(|| {
                        if let Some((from, feats)) = copy {
                            let keys = match from {
                                CopyFrom::Col => seg.cols,
                                CopyFrom::Edge => seg.edges,
                                CopyFrom::Row => seg.rows,
                            };
                            copy_segment::<R>(tile, base, w, c0, c1, seg.rows, keys, feats.as_slice());
                            return;
                        }
                        for i in 0..seg.len() {
                            let (row, col, e) = (ix(seg.rows[i]), ix(seg.cols[i]), ix(seg.edges[i]));
                            let (s, d) = endpoints(orientation, row, col);
                            let off = (row - base) * w;
                            job.fused_window::<R>(s, d, e, c0, c1, &mut tile[off + c0..off + c1]);
                        }
                    })
                });
            }
        }
    })
}

pub(crate) fn store_edges(plan: &BlockPlan, job: &Job<'_>, out: &mut [f32]) {
    let w = job.width;
    let orientation = plan.orientation();
    let dot = job.cfg.binary == BinaryOp::Dot;
    let shared = SharedSlice::new(out);
    for (c0, c1) in panels(w, plan.nb()) {
        for b in 0..plan.num_blocks() {
            (0..plan.num_tiles()).into_par_iter().for_each(|t| {
                let seg = plan.segment(b, t);
                for i in 0..seg.len() {
                    let (row, col, e) = (ix(seg.rows[i]), ix(seg.cols[i]), ix(seg.edges[i]));
                    let (s, d) = endpoints(orientation, row, col);
                    // SAFETY: each edge id occurs once in the plan, so this
                    // window of edge row `e` has a single writer.
                    let dst = unsafe { shared.range_mut(e * w + c0, c1 - c0) };
                    let (l, r) = (job.lhs_row(s, d, e), job.rhs_row(s, d, e));
                    if dot {
                        apply_binary_into(BinaryOp::Dot, l, r, dst);
                    } else {
                        apply_binary_into(job.cfg.binary, window(l, c0, c1), window(r, c0, c1), dst);
                    }
                }
            });
        }
    }
}
