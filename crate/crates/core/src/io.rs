//! Edge-list text files and the binary CSR format.
//!
//! Text: one `src dst` pair of decimal ids per line, `#` starts a comment and
//! an optional `%nodes N` line fixes the node count (otherwise one more than
//! the largest id).
//!
//! Binary CSR: `CSR1`, one orientation byte (0 = src-major, 1 = dst-major),
//! `num_rows`, `num_cols`, `num_edges` as u64 LE, then `indptr`, `indices`
//! and `edge_ids`, every element a u64 LE.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::graph::{CsrGraph, EdgeList, Orientation};
use crate::{Error, Idx, Result};

const CSR_MAGIC: &[u8; 4] = b"CSR1";

pub fn parse_edge_list<R: BufRead>(reader: R) -> Result<EdgeList> {
    let mut edges = Vec::new();
    let mut declared: Option<usize> = None;
    let mut max_id: Option<u64> = None;
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        let err = |msg: String| Error::Parse { line: line_no, msg };
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix('%') {
            let mut words = rest.split_whitespace();
            if words.next() == Some("nodes") {
                let n = words.next().ok_or_else(|| err("%nodes needs a count".into()))?;
                declared = Some(n.parse().map_err(|_| err(format!("bad node count {n:?}")))?);
            }
            continue;
        }
        let mut words = content.split_whitespace();
        let mut id = || -> Result<u64> {
            let w = words.next().ok_or_else(|| err("expected two node ids".into()))?;
            let v: u64 = w.parse().map_err(|_| err(format!("bad node id {w:?}")))?;
            if v > Idx::MAX as u64 {
                return Err(err(format!("node id {v} overflows the identifier width")));
            }
            Ok(v)
        };
        let (s, d) = (id()?, id()?);
        if words.next().is_some() {
            return Err(err("trailing tokens after the edge".into()));
        }
        max_id = max_id.max(Some(s.max(d)));
        edges.push((s as Idx, d as Idx));
    }
    let implied = max_id.map_or(0, |m| m as usize + 1);
    let num_nodes = declared.unwrap_or(implied);
    if num_nodes < implied {
        return Err(Error::Structural(format!("%nodes {num_nodes} but id {} appears", implied - 1)));
    }
    EdgeList::new(num_nodes, edges)
}

pub fn load_edge_list(path: impl AsRef<Path>) -> Result<EdgeList> {
    parse_edge_list(BufReader::new(File::open(path)?))
}

pub fn write_edge_list<W: Write>(mut w: W, edges: &EdgeList) -> Result<()> {
    writeln!(w, "%nodes {}", edges.num_nodes)?;
    for (s, d) in &edges.edges {
        writeln!(w, "{s} {d}")?;
    }
    Ok(())
}

pub fn save_edge_list(path: impl AsRef<Path>, edges: &EdgeList) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_edge_list(&mut w, edges)?;
    w.flush()?;
    Ok(())
}

pub fn write_csr<W: Write>(mut w: W, g: &CsrGraph) -> Result<()> {
    w.write_all(CSR_MAGIC)?;
    w.write_all(&[g.orientation().to_byte()])?;
    for n in [g.num_rows(), g.num_cols(), g.num_edges()] {
        w.write_all(&(n as u64).to_le_bytes())?;
    }
    for &x in g.indptr() {
        w.write_all(&(x as u64).to_le_bytes())?;
    }
    for &x in g.indices().iter().chain(g.edge_ids()) {
        w.write_all(&(x as u64).to_le_bytes())?;
    }
    Ok(())
}

fn read_u64s<R: Read>(r: &mut R, n: usize) -> Result<Vec<u64>> {
    let mut bytes = vec![0u8; n.checked_mul(8).ok_or_else(|| Error::Format("array too large".into()))?];
    r.read_exact(&mut bytes).map_err(|e| Error::Format(format!("truncated CSR file: {e}")))?;
    Ok(bytes.chunks_exact(8).map(|c| u64::from_le_bytes(c.try_into().unwrap())).collect())
}

fn to_idx(v: Vec<u64>) -> Result<Vec<Idx>> {
    v.into_iter()
        .map(|x| Idx::try_from(x).map_err(|_| Error::Format(format!("id {x} overflows the identifier width"))))
        .collect()
}

/// Reads and validates a binary CSR graph.
pub fn read_csr<R: Read>(mut r: R) -> Result<CsrGraph> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != CSR_MAGIC {
        return Err(Error::Format("missing CSR1 magic".into()));
    }
    let mut ob = [0u8; 1];
    r.read_exact(&mut ob)?;
    let orientation =
        Orientation::from_byte(ob[0]).ok_or_else(|| Error::Format(format!("bad orientation byte {}", ob[0])))?;
    let head = read_u64s(&mut r, 3)?;
    let (rows, cols, m) = (head[0] as usize, head[1] as usize, head[2] as usize);
    let indptr = read_u64s(&mut r, rows + 1)?.into_iter().map(|x| x as usize).collect();
    let indices = to_idx(read_u64s(&mut r, m)?)?;
    let edge_ids = to_idx(read_u64s(&mut r, m)?)?;
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(Error::Format("trailing bytes after CSR arrays".into()));
    }
    CsrGraph::from_parts(orientation, rows, cols, indptr, indices, edge_ids)
}

pub fn save_csr(path: impl AsRef<Path>, g: &CsrGraph) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_csr(&mut w, g)?;
    w.flush()?;
    Ok(())
}

pub fn load_csr(path: impl AsRef<Path>) -> Result<CsrGraph> {
    read_csr(BufReader::new(File::open(path)?))
}

/// Loads either file format, telling them apart by the CSR magic.
pub fn load_graph(path: impl AsRef<Path>) -> Result<EdgeList> {
    let mut r = BufReader::new(File::open(path)?);
    if r.fill_buf()?.starts_with(CSR_MAGIC) {
        Ok(read_csr(r)?.to_edge_list())
    } else {
        parse_edge_list(r)
    }
}
