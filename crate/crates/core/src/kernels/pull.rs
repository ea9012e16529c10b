//! Owner-computes pull: one worker per destination row, messages staged in a
//! scratch buffer before being reduced.

use rayon::prelude::*;

use crate::graph::CsrGraph;

use super::job::{accumulate, endpoints, ix, vectorized, with_reducer, Job, SharedSlice};

/// Node output over an owner-major graph.
pub(crate) fn reduce_nodes(g: &CsrGraph, job: &Job<'_>, out: &mut [f32]) {
    let w = job.width;
    let orientation = g.orientation();
    let identity = job.cfg.reduce.identity();
    with_reducer!(job.cfg.reduce, R => {
        out.par_chunks_mut(w)
            .enumerate()
            .with_min_len(64)
            .for_each_init(
                || vec![0.0f32; w],
                |msg, (r, acc)| {
                    let (cols, eids) = g.row(r);
                    if cols.is_empty() {
                        acc.fill(0.0);
                        return;
                    }
                    acc.fill(identity);
                    vectorized(|| {
                        for (&c, &e) in cols.iter().zip(eids) {
                            let (s, d) = endpoints(orientation, r, ix(c));
                            job.message_into(s, d, ix(e), msg);
                            accumulate::<R>(acc, msg);
                        }
                    })
                },
            );
    })
}

/// Edge output: each nonzero writes its own edge row.
pub(crate) fn store_edges(g: &CsrGraph, job: &Job<'_>, out: &mut [f32]) {
    let w = job.width;
    let orientation = g.orientation();
    let shared = SharedSlice::new(out);
    (0..g.num_rows()).into_par_iter().with_min_len(64).for_each(|r| {
        let (cols, eids) = g.row(r);
        for (&c, &e) in cols.iter().zip(eids) {
            let (s, d) = endpoints(orientation, r, ix(c));
            // SAFETY: edge ids are a permutation, so every edge row is
            // written by exactly one nonzero.
            let row = unsafe { shared.range_mut(ix(e) * w, w) };
            job.message_into(s, d, ix(e), row);
        }
    });
}
