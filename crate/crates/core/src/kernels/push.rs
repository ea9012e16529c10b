//! Scatter-style push: workers own source rows and push messages into
//! destination rows, serialized by a striped lock table.

use std::sync::Mutex;

use rayon::prelude::*;

use crate::feature::ReduceOp;
use crate::graph::CsrGraph;
use crate::Idx;

use super::job::{accumulate, endpoints, ix, vectorized, with_reducer, Job, SharedSlice};

pub const LOCK_STRIPES: usize = 4096;

/// Node output. `g` is scatter-major: its indices are the output rows.
pub(crate) fn reduce_nodes(g: &CsrGraph, job: &Job<'_>, out: &mut [f32]) {
    let w = job.width;
    let orientation = g.orientation();
    let reduce = job.cfg.reduce;
    let num_owners = g.num_cols();
    out.par_chunks_mut(w.max(1) * 1024).for_each(|c| c.fill(reduce.identity()));

    let locks: Vec<Mutex<()>> = (0..LOCK_STRIPES).map(|_| Mutex::new(())).collect();
    let copy_last = reduce == ReduceOp::CopyLast;
    // Canonical key (row entity, edge id) of the message currently held by
    // each output row; the largest key is the last one in the owner's order.
    let mut winners: Vec<Option<(Idx, Idx)>> = if copy_last { vec![None; num_owners] } else { Vec::new() };
    let row_only = job.message_depends_on_row_only(orientation);
    {
        let shared = SharedSlice::new(out);
        let shared_winners = SharedSlice::new(&mut winners);
        with_reducer!(reduce, R => {
            (0..g.num_rows()).into_par_iter().with_min_len(16).for_each_init(
                || vec![0.0f32; w],
                |msg, r| {
                    let (cols, eids) = g.row(r);
                    if cols.is_empty() {
                        return;
                    }
                    if row_only {
                        // One copy of the source row serves every out-edge.
                        let (s, d) = endpoints(orientation, r, ix(cols[0]));
                        job.message_into(s, d, ix(eids[0]), msg);
                    }
                    vectorized(|| {
                        for (&c, &e) in cols.iter().zip(eids) {
                            let owner = ix(c);
                            if !row_only {
                                let (s, d) = endpoints(orientation, r, owner);
                                job.message_into(s, d, ix(e), msg);
                            }
                            let _guard = locks[owner % LOCK_STRIPES].lock().unwrap_or_else(|p| p.into_inner());
                            // SAFETY: the stripe lock guarding `owner` is held, and
                            // only code holding it touches row `owner`.
                            let acc = unsafe { shared.range_mut(owner * w, w) };
                            if copy_last {
                                let key = (r as Idx, e);
                                // SAFETY: same lock as above.
                                let win = unsafe { shared_winners.range_mut(owner, 1) };
                                if win[0].is_none_or(|k| key > k) {
                                    win[0] = Some(key);
                                    acc.copy_from_slice(msg);
                                }
                            } else {
                                accumulate::<R>(acc, msg);
                            }
                        }
                    })
                },
            );
        });
    }

    if reduce.identity() != 0.0 {
        let mut touched = vec![false; num_owners];
        for &c in g.indices() {
            touched[ix(c)] = true;
        }
        out.par_chunks_mut(w).zip(touched.par_iter()).filter(|(_, t)| !**t).for_each(|(row, _)| row.fill(0.0));
    }
}
