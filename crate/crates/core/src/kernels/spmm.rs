//! Unblocked row-parallel sparse-dense product for full-graph processing:
//! messages are fused into the reduction with no staging buffer.

use rayon::prelude::*;

use crate::graph::CsrGraph;

use super::job::{endpoints, ix, vectorized, with_reducer, Job};

pub(crate) fn reduce_nodes(g: &CsrGraph, job: &Job<'_>, out: &mut [f32]) {
    let w = job.width;
    let orientation = g.orientation();
    let identity = job.cfg.reduce.identity();
    with_reducer!(job.cfg.reduce, R => {
        out.par_chunks_mut(w).enumerate().with_min_len(256).for_each(|(r, acc)| {
            let (cols, eids) = g.row(r);
            if cols.is_empty() {
                acc.fill(0.0);
                return;
            }
            acc.fill(identity);
            vectorized(|| {
                for (&c, &e) in cols.iter().zip(eids) {
                    let (s, d) = endpoints(orientation, r, ix(c));
                    job.fused::<R>(s, d, ix(e), acc);
                }
            })
        });
    })
}

/// Edge output, parallel over edge ids.
pub(crate) fn store_edges(g: &CsrGraph, job: &Job<'_>, out: &mut [f32]) {
    let (src, dst) = g.endpoints();
    out.par_chunks_mut(job.width).enumerate().with_min_len(256).for_each(|(e, row)| {
        job.message_into(ix(src[e]), ix(dst[e]), e, row);
    });
}
