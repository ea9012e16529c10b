//! Precomputed traversal schedule for the blocked pull strategy.
//!
//! The source dimension of the adjacency is cut into blocks of `kb` nodes.
//! Inside each block the nonzeros are radix-sorted by source id so feature
//! rows are read in ascending address order. Each block is further split by
//! destination row tile, which is the unit of work handed to one thread; a
//! tile's output rows are owned by that thread for the whole kernel.
//!
//! A plan is built once per graph and reused by every kernel call on it.

use crate::graph::{CsrGraph, Orientation};
use crate::{Error, Idx, Result};

/// Target bytes of one source block's feature rows (half of a typical L2).
pub const BLOCK_BYTES: usize = 256 * 1024;

/// Last-level cache size assumed when the real one cannot be read.
pub const ASSUMED_LLC_BYTES: usize = 32 * 1024 * 1024;

/// Number of destination tiles the default plan aims for.
pub const DEFAULT_TILES: usize = 64;

/// Smallest default destination tile.
pub const MIN_TILE_ROWS: usize = 64;

/// `kb` such that `kb` feature rows of width `dim` fill [`BLOCK_BYTES`].
pub fn default_kb(dim: usize) -> usize {
    (BLOCK_BYTES / (dim.max(1) * 4)).max(1)
}

fn parse_cache_size(s: &str) -> Option<usize> {
    let s = s.trim();
    let (digits, unit) = match s.find(|c: char| !c.is_ascii_digit()) {
        Some(i) => s.split_at(i),
        None => (s, ""),
    };
    let n: usize = digits.parse().ok()?;
    match unit {
        "" => Some(n),
        "K" => Some(n << 10),
        "M" => Some(n << 20),
        "G" => Some(n << 30),
        _ => None,
    }
}

/// Size of the largest data or unified cache of CPU 0 as reported by Linux
/// sysfs, or [`ASSUMED_LLC_BYTES`] elsewhere.
pub fn llc_bytes() -> usize {
    static LLC: std::sync::OnceLock<usize> = std::sync::OnceLock::new();
    *LLC.get_or_init(|| {
        let dir = std::path::Path::new("/sys/devices/system/cpu/cpu0/cache");
        let read = |p: std::path::PathBuf| std::fs::read_to_string(p).ok();
        let mut best: Option<(u32, usize)> = None;
        for entry in std::fs::read_dir(dir).into_iter().flatten().flatten() {
            let p = entry.path();
            if read(p.join("type")).is_some_and(|t| t.trim() == "Instruction") {
                continue;
            }
            let level = read(p.join("level")).and_then(|l| l.trim().parse().ok());
            let size = read(p.join("size")).and_then(|s| parse_cache_size(&s));
            if let (Some(level), Some(size)) = (level, size) {
                if best.is_none_or(|(l, _)| level > l) {
                    best = Some((level, size));
                }
            }
        }
        best.map_or(ASSUMED_LLC_BYTES, |(_, size)| size)
    })
}

/// `nb` such that a `num_rows x nb` output panel fits in half of an
/// `llc`-byte cache, rounded down to a multiple of 8, at least 8 and at most
/// `dim`.
pub fn nb_for_cache(num_rows: usize, dim: usize, llc: usize) -> usize {
    let fit = llc / 2 / (num_rows.max(1) * 4);
    let nb = if fit >= 8 { fit / 8 * 8 } else { 8 };
    nb.min(dim.max(1))
}

/// [`nb_for_cache`] for this machine's last-level cache.
pub fn default_nb(num_rows: usize, dim: usize) -> usize {
    nb_for_cache(num_rows, dim, llc_bytes())
}

pub fn default_tile_rows(num_rows: usize) -> usize {
    num_rows.div_ceil(DEFAULT_TILES).max(MIN_TILE_ROWS)
}

/// Stable LSD radix sort of `keys`, eight bits per pass. Returns the sorting
/// permutation. Passes above the highest set bit of the largest key are
/// skipped.
pub fn radix_sort_permutation(keys: &[Idx]) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..keys.len()).collect();
    let Some(&max) = keys.iter().max() else {
        return perm;
    };
    let mut scratch = vec![0usize; keys.len()];
    let mut shift = 0u32;
    while shift < Idx::BITS && (max >> shift) != 0 {
        let mut counts = [0usize; 257];
        for &k in keys {
            counts[((k >> shift) & 0xff) as usize + 1] += 1;
        }
        for d in 0..256 {
            counts[d + 1] += counts[d];
        }
        for &i in &perm {
            let d = ((keys[i] >> shift) & 0xff) as usize;
            scratch[counts[d]] = i;
            counts[d] += 1;
        }
        std::mem::swap(&mut perm, &mut scratch);
        shift += 8;
    }
    perm
}

/// Blocked, sorted edge schedule over an owner-major CSR.
///
/// For a `DstMajor` graph the owners are destination nodes and the blocked
/// dimension is the source node; for `SrcMajor` the roles swap.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockPlan {
    orientation: Orientation,
    kb: usize,
    nb: usize,
    tile_rows: usize,
    num_rows: usize,
    num_cols: usize,
    num_blocks: usize,
    num_tiles: usize,
    /// Start of segment `block * num_tiles + tile`, plus a final end offset.
    seg_offsets: Vec<usize>,
    /// Blocked coordinate (source node for `DstMajor`).
    cols: Vec<Idx>,
    /// Owner row (destination node for `DstMajor`).
    rows: Vec<Idx>,
    edges: Vec<Idx>,
    row_degree: Vec<Idx>,
}

/// Borrowed view of one `(block, tile)` segment.
#[derive(Debug, Clone, Copy)]
pub struct Segment<'a> {
    pub cols: &'a [Idx],
    pub rows: &'a [Idx],
    pub edges: &'a [Idx],
}

impl<'a> Segment<'a> {
    pub fn len(&self) -> usize {
        self.cols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cols.is_empty()
    }
}

/// Builds a plan with the default destination tiling.
pub fn build_block_plan(g: &CsrGraph, kb: usize, nb: usize) -> Result<BlockPlan> {
    BlockPlan::build(g, kb, nb, default_tile_rows(g.num_rows()))
}

impl BlockPlan {
    pub fn build(g: &CsrGraph, kb: usize, nb: usize, tile_rows: usize) -> Result<Self> {
        if kb == 0 || nb == 0 || tile_rows == 0 {
            return Err(Error::Plan(format!("kb ({kb}), nb ({nb}) and tile rows ({tile_rows}) must be positive")));
        }
        let m = g.num_edges();
        let num_blocks = g.num_cols().div_ceil(kb);
        let num_tiles = g.num_rows().div_ceil(tile_rows);

        let mut rows = Vec::with_capacity(m);
        for r in 0..g.num_rows() {
            rows.extend(std::iter::repeat_n(r as Idx, g.degree(r)));
        }

        // Row-major order is (row, col, edge); a stable sort on col gives
        // (col, row, edge), and a stable bucket pass on (block, tile) keeps
        // that order inside each segment.
        let by_col = radix_sort_permutation(g.indices());
        let bucket_of = |i: usize| (g.indices()[i] as usize / kb) * num_tiles + rows[i] as usize / tile_rows;
        let num_segs = num_blocks * num_tiles;
        let mut seg_offsets = vec![0usize; num_segs + 1];
        for i in 0..m {
            seg_offsets[bucket_of(i) + 1] += 1;
        }
        for s in 0..num_segs {
            seg_offsets[s + 1] += seg_offsets[s];
        }
        let mut cursor = seg_offsets.clone();
        let mut order = vec![0usize; m];
        for &i in &by_col {
            let slot = &mut cursor[bucket_of(i)];
            order[*slot] = i;
            *slot += 1;
        }

        Ok(BlockPlan {
            orientation: g.orientation(),
            kb,
            nb,
            tile_rows,
            num_rows: g.num_rows(),
            num_cols: g.num_cols(),
            num_blocks,
            num_tiles,
            seg_offsets,
            cols: order.iter().map(|&i| g.indices()[i]).collect(),
            rows: order.iter().map(|&i| rows[i]).collect(),
            edges: order.iter().map(|&i| g.edge_ids()[i]).collect(),
            row_degree: (0..g.num_rows()).map(|r| g.degree(r) as Idx).collect(),
        })
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn kb(&self) -> usize {
        self.kb
    }

    pub fn nb(&self) -> usize {
        self.nb
    }

    pub fn tile_rows(&self) -> usize {
        self.tile_rows
    }

    pub fn num_rows(&self) -> usize {
        self.num_rows
    }

    pub fn num_cols(&self) -> usize {
        self.num_cols
    }

    pub fn num_blocks(&self) -> usize {
        self.num_blocks
    }

    pub fn num_tiles(&self) -> usize {
        self.num_tiles
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn row_degree(&self, r: usize) -> usize {
        self.row_degree[r] as usize
    }

    #[inline]
    pub fn segment(&self, block: usize, tile: usize) -> Segment<'_> {
        let s = block * self.num_tiles + tile;
        let (lo, hi) = (self.seg_offsets[s], self.seg_offsets[s + 1]);
        Segment { cols: &self.cols[lo..hi], rows: &self.rows[lo..hi], edges: &self.edges[lo..hi] }
    }

    /// All `(src, dst, edge)` triples of one block, tile by tile. Sources are
    /// non-decreasing within each tile, and across the whole block when the
    /// plan has a single tile.
    pub fn block_triples(&self, block: usize) -> Vec<(Idx, Idx, Idx)> {
        let lo = self.seg_offsets[block * self.num_tiles];
        let hi = self.seg_offsets[(block + 1) * self.num_tiles];
        (lo..hi)
            .map(|i| match self.orientation {
                Orientation::DstMajor => (self.cols[i], self.rows[i], self.edges[i]),
                Orientation::SrcMajor => (self.rows[i], self.cols[i], self.edges[i]),
            })
            .collect()
    }

    /// Whether the plan was built from a graph of this shape.
    pub fn matches(&self, g: &CsrGraph) -> bool {
        self.orientation == g.orientation()
            && self.num_rows == g.num_rows()
            && self.num_cols == g.num_cols()
            && self.num_edges() == g.num_edges()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_csr, EdgeList};

    fn three_node() -> CsrGraph {
        build_csr(&EdgeList::new(3, vec![(0, 2), (1, 2), (0, 1)]).unwrap(), Orientation::DstMajor).unwrap()
    }

    #[test]
    fn radix_sort_is_stable() {
        let keys: Vec<Idx> = vec![300, 2, 70000, 2, 0, 300, 1];
        let perm = radix_sort_permutation(&keys);
        assert_eq!(perm, vec![4, 6, 1, 3, 0, 5, 2]);
        assert!(radix_sort_permutation(&[]).is_empty());
        assert_eq!(radix_sort_permutation(&[0, 0, 0]), vec![0, 1, 2]);
    }

    #[test]
    fn three_node_single_block() {
        let plan = build_block_plan(&three_node(), 2, 8).unwrap();
        assert_eq!(plan.num_blocks(), 2);
        // Hand radix sort by source: (0,1,e2), (0,2,e0), (1,2,e1).
        assert_eq!(plan.block_triples(0), vec![(0, 1, 2), (0, 2, 0), (1, 2, 1)]);
        assert!(plan.block_triples(1).is_empty());
    }

    #[test]
    fn kb_covering_all_nodes_gives_one_block() {
        let plan = build_block_plan(&three_node(), 100, 1).unwrap();
        assert_eq!(plan.num_blocks(), 1);
        assert_eq!(plan.block_triples(0), vec![(0, 1, 2), (0, 2, 0), (1, 2, 1)]);
    }

    #[test]
    fn empty_graph_gives_empty_plan() {
        let g = build_csr(&EdgeList::new(0, vec![]).unwrap(), Orientation::DstMajor).unwrap();
        let plan = build_block_plan(&g, 4, 4).unwrap();
        assert_eq!((plan.num_blocks(), plan.num_edges()), (0, 0));
        let g = build_csr(&EdgeList::new(5, vec![]).unwrap(), Orientation::DstMajor).unwrap();
        let plan = build_block_plan(&g, 4, 4).unwrap();
        assert_eq!(plan.num_edges(), 0);
        assert!(plan.block_triples(0).is_empty());
    }

    #[test]
    fn zero_sizes_rejected() {
        assert!(build_block_plan(&three_node(), 0, 1).is_err());
        assert!(build_block_plan(&three_node(), 1, 0).is_err());
    }

    #[test]
    fn default_sizes() {
        assert_eq!(default_kb(64), 1024);
        assert_eq!(default_kb(1), 65536);
        assert_eq!(nb_for_cache(100_000, 64, ASSUMED_LLC_BYTES), 40);
        assert_eq!(nb_for_cache(10, 4, ASSUMED_LLC_BYTES), 4);
        assert_eq!(nb_for_cache(10_000_000, 64, ASSUMED_LLC_BYTES), 8);
        assert_eq!(nb_for_cache(100_000, 64, 300 << 20), 64);
        assert_eq!(parse_cache_size("307200K\n"), Some(300 << 20));
        assert_eq!(parse_cache_size("32768"), Some(32768));
        assert_eq!(parse_cache_size("2 MiB"), None);
        assert!(llc_bytes() > 0);
        assert_eq!(default_tile_rows(10), MIN_TILE_ROWS);
        assert_eq!(default_tile_rows(100_000), 1563);
    }
}
