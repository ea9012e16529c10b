//! Directed graphs in compressed sparse row form.
//!
//! Every nonzero of a [`CsrGraph`] carries the identifier of the edge it came
//! from, which is the edge's position in the originating [`EdgeList`]. Kernels
//! use this to gather or scatter per-edge features without an explicit
//! incidence matrix.

use std::fmt;

use crate::{Error, Idx, Result};

/// Which endpoint indexes the rows of a [`CsrGraph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Orientation {
    /// Rows are source nodes, indices are destinations (push view).
    SrcMajor,
    /// Rows are destination nodes, indices are sources (pull view).
    DstMajor,
}

impl Orientation {
    pub fn flipped(self) -> Self {
        match self {
            Orientation::SrcMajor => Orientation::DstMajor,
            Orientation::DstMajor => Orientation::SrcMajor,
        }
    }

    pub(crate) fn to_byte(self) -> u8 {
        match self {
            Orientation::SrcMajor => 0,
            Orientation::DstMajor => 1,
        }
    }

    pub(crate) fn from_byte(b: u8) -> Option<Self> {
        match b {
            0 => Some(Orientation::SrcMajor),
            1 => Some(Orientation::DstMajor),
            _ => None,
        }
    }
}

/// Directed multigraph as a sequence of `(src, dst)` pairs. The edge id of a
/// pair is its position in `edges`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EdgeList {
    pub num_nodes: usize,
    pub edges: Vec<(Idx, Idx)>,
}

impl EdgeList {
    pub fn new(num_nodes: usize, edges: Vec<(Idx, Idx)>) -> Result<Self> {
        let list = EdgeList { num_nodes, edges };
        list.check()?;
        Ok(list)
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Fails if an endpoint is not a node of the graph or the edge count does
    /// not fit the identifier type.
    pub fn check(&self) -> Result<()> {
        if self.edges.len() as u128 > Idx::MAX as u128 || self.num_nodes as u128 > Idx::MAX as u128 + 1 {
            return Err(Error::Structural(format!(
                "graph with {} nodes and {} edges exceeds the identifier width",
                self.num_nodes,
                self.edges.len()
            )));
        }
        for (eid, &(s, d)) in self.edges.iter().enumerate() {
            if s as usize >= self.num_nodes || d as usize >= self.num_nodes {
                return Err(Error::Structural(format!(
                    "edge {eid} ({s} -> {d}) references a node outside 0..{}",
                    self.num_nodes
                )));
            }
        }
        Ok(())
    }
}

/// Compressed sparse row adjacency with per-nonzero edge ids.
///
/// Within each row the indices are sorted ascending, ties broken by edge id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsrGraph {
    orientation: Orientation,
    num_rows: usize,
    num_cols: usize,
    indptr: Vec<usize>,
    indices: Vec<Idx>,
    edge_ids: Vec<Idx>,
}

impl CsrGraph {
    /// Builds a graph from raw arrays and checks every structural invariant.
    pub fn from_parts(
        orientation: Orientation,
        num_rows: usize,
        num_cols: usize,
        indptr: Vec<usize>,
        indices: Vec<Idx>,
        edge_ids: Vec<Idx>,
    ) -> Result<Self> {
        let g = Self::from_parts_unchecked(orientation, num_rows, num_cols, indptr, indices, edge_ids);
        validate(&g)?;
        Ok(g)
    }

    /// Builds a graph from raw arrays without checking them. Kernels assume
    /// a valid graph; call [`validate`] before handing the result to one.
    pub fn from_parts_unchecked(
        orientation: Orientation,
        num_rows: usize,
        num_cols: usize,
        indptr: Vec<usize>,
        indices: Vec<Idx>,
        edge_ids: Vec<Idx>,
    ) -> Self {
        CsrGraph { orientation, num_rows, num_cols, indptr, indices, edge_ids }
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn num_rows(&self) -> usize {
        self.num_rows
    }

    pub fn num_cols(&self) -> usize {
        self.num_cols
    }

    /// Node count of the (square) adjacency.
    pub fn num_nodes(&self) -> usize {
        self.num_rows.max(self.num_cols)
    }

    pub fn num_edges(&self) -> usize {
        self.indices.len()
    }

    pub fn indptr(&self) -> &[usize] {
        &self.indptr
    }

    pub fn indices(&self) -> &[Idx] {
        &self.indices
    }

    pub fn edge_ids(&self) -> &[Idx] {
        &self.edge_ids
    }

    /// Neighbor indices and edge ids of one row.
    #[inline]
    pub fn row(&self, r: usize) -> (&[Idx], &[Idx]) {
        let (lo, hi) = (self.indptr[r], self.indptr[r + 1]);
        (&self.indices[lo..hi], &self.edge_ids[lo..hi])
    }

    #[inline]
    pub fn degree(&self, r: usize) -> usize {
        self.indptr[r + 1] - self.indptr[r]
    }

    /// Flattens back into an edge list ordered by edge id.
    pub fn to_edge_list(&self) -> EdgeList {
        let (src, dst) = self.endpoints();
        EdgeList { num_nodes: self.num_nodes(), edges: src.into_iter().zip(dst).collect() }
    }

    /// Source and destination node of every edge, indexed by edge id.
    pub fn endpoints(&self) -> (Vec<Idx>, Vec<Idx>) {
        let m = self.num_edges();
        let mut src = vec![0 as Idx; m];
        let mut dst = vec![0 as Idx; m];
        for r in 0..self.num_rows {
            let (cols, eids) = self.row(r);
            for (&c, &e) in cols.iter().zip(eids) {
                let (s, d) = match self.orientation {
                    Orientation::SrcMajor => (r as Idx, c),
                    Orientation::DstMajor => (c, r as Idx),
                };
                src[e as usize] = s;
                dst[e as usize] = d;
            }
        }
        (src, dst)
    }
}

/// Stable counting sort: returns bucket offsets and the permutation that
/// orders `keys` by bucket.
fn counting_sort(keys: &[Idx], num_buckets: usize) -> (Vec<usize>, Vec<usize>) {
    let mut offsets = vec![0usize; num_buckets + 1];
    for &k in keys {
        offsets[k as usize + 1] += 1;
    }
    for i in 0..num_buckets {
        offsets[i + 1] += offsets[i];
    }
    let mut cursor = offsets.clone();
    let mut perm = vec![0usize; keys.len()];
    for (i, &k) in keys.iter().enumerate() {
        let slot = &mut cursor[k as usize];
        perm[*slot] = i;
        *slot += 1;
    }
    (offsets, perm)
}

/// Builds the CSR form of an edge list in the requested orientation.
pub fn build_csr(edges: &EdgeList, orientation: Orientation) -> Result<CsrGraph> {
    edges.check()?;
    let n = edges.num_nodes;
    let (rows, cols): (Vec<Idx>, Vec<Idx>) = match orientation {
        Orientation::SrcMajor => edges.edges.iter().copied().unzip(),
        Orientation::DstMajor => edges.edges.iter().map(|&(s, d)| (d, s)).unzip(),
    };

    // Sort by column, then stably by row: each row ends up ordered by
    // (column, edge id).
    let (_, by_col) = counting_sort(&cols, n);
    let rows_by_col: Vec<Idx> = by_col.iter().map(|&i| rows[i]).collect();
    let (indptr, by_row) = counting_sort(&rows_by_col, n);

    let order: Vec<usize> = by_row.iter().map(|&i| by_col[i]).collect();
    let indices = order.iter().map(|&i| cols[i]).collect();
    let edge_ids = order.iter().map(|&i| i as Idx).collect();

    Ok(CsrGraph { orientation, num_rows: n, num_cols: n, indptr, indices, edge_ids })
}

/// Flips the orientation of a graph, keeping every edge id attached to its
/// edge.
pub fn transpose(g: &CsrGraph) -> CsrGraph {
    let mut old_rows = Vec::with_capacity(g.num_edges());
    for r in 0..g.num_rows {
        old_rows.extend(std::iter::repeat_n(r as Idx, g.degree(r)));
    }
    // Entries are visited in (row, col, edge id) order, so a stable sort on
    // the column gives (new row, new col, edge id) order.
    let (indptr, perm) = counting_sort(&g.indices, g.num_cols);
    let indices = perm.iter().map(|&i| old_rows[i]).collect();
    let edge_ids = perm.iter().map(|&i| g.edge_ids[i]).collect();
    CsrGraph {
        orientation: g.orientation.flipped(),
        num_rows: g.num_cols,
        num_cols: g.num_rows,
        indptr,
        indices,
        edge_ids,
    }
}

/// First violated structural invariant of a [`CsrGraph`].
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Violation {
    #[error("indptr has length {actual}, expected {expected}")]
    IndptrLength { expected: usize, actual: usize },
    #[error("indptr does not start at 0")]
    IndptrStart,
    #[error("indptr not monotone at row {row}")]
    IndptrNotMonotone { row: usize },
    #[error("indptr ends at {end} but there are {num_edges} nonzeros")]
    IndptrEnd { end: usize, num_edges: usize },
    #[error("edge_ids has length {actual}, expected {expected}")]
    EdgeIdsLength { expected: usize, actual: usize },
    #[error("index {index} at position {pos} is not below num_cols {num_cols}")]
    IndexOutOfRange { pos: usize, index: usize, num_cols: usize },
    #[error("edge_ids not a permutation (duplicate or out-of-range id at position {pos})")]
    EdgeIdsNotPermutation { pos: usize },
    #[error("row {row} not sorted at position {pos}")]
    RowNotSorted { row: usize, pos: usize },
}

/// Checks every [`CsrGraph`] invariant and reports the first one broken.
pub fn validate(g: &CsrGraph) -> Result<(), Violation> {
    let m = g.indices.len();
    if g.indptr.len() != g.num_rows + 1 {
        return Err(Violation::IndptrLength { expected: g.num_rows + 1, actual: g.indptr.len() });
    }
    if g.indptr[0] != 0 {
        return Err(Violation::IndptrStart);
    }
    if let Some(row) = (1..g.indptr.len()).find(|&i| g.indptr[i] < g.indptr[i - 1]) {
        return Err(Violation::IndptrNotMonotone { row });
    }
    if g.indptr[g.num_rows] != m {
        return Err(Violation::IndptrEnd { end: g.indptr[g.num_rows], num_edges: m });
    }
    if g.edge_ids.len() != m {
        return Err(Violation::EdgeIdsLength { expected: m, actual: g.edge_ids.len() });
    }
    if let Some(pos) = g.indices.iter().position(|&c| c as usize >= g.num_cols) {
        return Err(Violation::IndexOutOfRange { pos, index: g.indices[pos] as usize, num_cols: g.num_cols });
    }
    let mut seen = vec![false; m];
    for (pos, &e) in g.edge_ids.iter().enumerate() {
        match seen.get_mut(e as usize) {
            Some(s) if !*s => *s = true,
            _ => return Err(Violation::EdgeIdsNotPermutation { pos }),
        }
    }
    for row in 0..g.num_rows {
        for pos in g.indptr[row] + 1..g.indptr[row + 1] {
            let prev = (g.indices[pos - 1], g.edge_ids[pos - 1]);
            if (g.indices[pos], g.edge_ids[pos]) < prev {
                return Err(Violation::RowNotSorted { row, pos });
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DegreeSummary {
    pub min: usize,
    pub max: usize,
    /// Lowest-numbered node attaining `max`.
    pub max_node: Option<usize>,
    pub mean: f64,
}

impl DegreeSummary {
    fn from_degrees(deg: &[usize]) -> Self {
        let Some(&max) = deg.iter().max() else {
            return DegreeSummary::default();
        };
        DegreeSummary {
            min: deg.iter().copied().min().unwrap_or(0),
            max,
            max_node: deg.iter().position(|&d| d == max),
            mean: deg.iter().sum::<usize>() as f64 / deg.len() as f64,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DegreeStats {
    pub num_nodes: usize,
    pub num_edges: usize,
    pub in_degree: DegreeSummary,
    pub out_degree: DegreeSummary,
    /// Nodes with neither in- nor out-edges.
    pub isolated: usize,
}

impl fmt::Display for DegreeStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "nodes: {}", self.num_nodes)?;
        writeln!(f, "edges: {}", self.num_edges)?;
        for (name, s) in [("in-degree", &self.in_degree), ("out-degree", &self.out_degree)] {
            writeln!(f, "{name}: min {} max {} mean {:.3}", s.min, s.max, s.mean)?;
        }
        write!(f, "isolated: {}", self.isolated)
    }
}

pub fn degree_stats(g: &CsrGraph) -> DegreeStats {
    let n = g.num_nodes();
    let mut row_deg = vec![0usize; n];
    for (r, d) in row_deg.iter_mut().enumerate().take(g.num_rows) {
        *d = g.degree(r);
    }
    let mut col_deg = vec![0usize; n];
    for &c in &g.indices {
        col_deg[c as usize] += 1;
    }
    let isolated = row_deg.iter().zip(&col_deg).filter(|(a, b)| **a == 0 && **b == 0).count();
    let (in_deg, out_deg) = match g.orientation {
        Orientation::DstMajor => (&row_deg, &col_deg),
        Orientation::SrcMajor => (&col_deg, &row_deg),
    };
    DegreeStats {
        num_nodes: n,
        num_edges: g.num_edges(),
        in_degree: DegreeSummary::from_degrees(in_deg),
        out_degree: DegreeSummary::from_degrees(out_deg),
        isolated,
    }
}
