//! Dense feature matrices and the element-wise operators applied to them.

use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::{Error, Result};

const FMAT_MAGIC: &[u8; 5] = b"FMAT1";

/// Row-major matrix of `f32` feature vectors, one row per node or edge.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    rows: usize,
    dim: usize,
    data: Vec<f32>,
}

impl FeatureMatrix {
    pub fn new(rows: usize, dim: usize, data: Vec<f32>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Shape("feature dim must be at least 1".into()));
        }
        if rows.checked_mul(dim) != Some(data.len()) {
            return Err(Error::Shape(format!("data has {} elements, expected {rows} x {dim}", data.len())));
        }
        Ok(FeatureMatrix { rows, dim, data })
    }

    /// Matrix with every element set to `value`.
    ///
    /// # Panics
    ///
    /// Panics if `dim` is 0.
    pub fn filled(rows: usize, dim: usize, value: f32) -> Self {
        assert!(dim >= 1, "feature dim must be at least 1");
        FeatureMatrix { rows, dim, data: vec![value; rows * dim] }
    }

    pub fn zeros(rows: usize, dim: usize) -> Self {
        Self::filled(rows, dim, 0.0)
    }

    pub fn from_rows<R: AsRef<[f32]>>(rows: &[R]) -> Result<Self> {
        let dim = rows.first().map_or(1, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * dim);
        for (i, r) in rows.iter().enumerate() {
            if r.as_ref().len() != dim {
                return Err(Error::Shape(format!("row {i} has width {}, expected {dim}", r.as_ref().len())));
            }
            data.extend_from_slice(r.as_ref());
        }
        Self::new(rows.len(), dim, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f32] {
        &mut self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f32> {
        self.data
    }

    /// Element-wise scaled copy.
    pub fn scaled(&self, alpha: f32) -> Self {
        FeatureMatrix { rows: self.rows, dim: self.dim, data: self.data.iter().map(|x| x * alpha).collect() }
    }

    /// Writes the `FMAT1` binary form: magic, rows and dim as u64 LE, then
    /// the data as f32 LE.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(FMAT_MAGIC)?;
        w.write_all(&(self.rows as u64).to_le_bytes())?;
        w.write_all(&(self.dim as u64).to_le_bytes())?;
        for x in &self.data {
            w.write_all(&x.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 5];
        r.read_exact(&mut magic)?;
        if &magic != FMAT_MAGIC {
            return Err(Error::Format("missing FMAT1 magic".into()));
        }
        let mut word = [0u8; 8];
        r.read_exact(&mut word)?;
        let rows = u64::from_le_bytes(word) as usize;
        r.read_exact(&mut word)?;
        let dim = u64::from_le_bytes(word) as usize;
        let len = rows.checked_mul(dim).ok_or_else(|| Error::Format(format!("{rows} x {dim} overflows")))?;
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        if bytes.len() != len * 4 {
            return Err(Error::Format(format!("expected {} data bytes, found {}", len * 4, bytes.len())));
        }
        let data = bytes.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]])).collect();
        Self::new(rows, dim, data)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_from(BufReader::new(File::open(path)?))
    }
}

/// Element-wise binary operator producing a message from two operands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    /// Inner product; the message has width 1.
    Dot,
    /// Copies the left operand; the right operand is ignored.
    CopyLhs,
}

impl BinaryOp {
    pub const ALL: [BinaryOp; 6] =
        [BinaryOp::Add, BinaryOp::Sub, BinaryOp::Mul, BinaryOp::Div, BinaryOp::Dot, BinaryOp::CopyLhs];

    pub fn token(self) -> &'static str {
        match self {
            BinaryOp::Add => "add",
            BinaryOp::Sub => "sub",
            BinaryOp::Mul => "mul",
            BinaryOp::Div => "div",
            BinaryOp::Dot => "dot",
            BinaryOp::CopyLhs => "copy",
        }
    }

    pub fn from_token(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|op| op.token() == s)
    }

    /// Width of the message produced from operands of the given widths.
    pub fn output_width(self, lhs: usize, rhs: Option<usize>) -> Result<usize> {
        if self == BinaryOp::CopyLhs {
            return Ok(lhs);
        }
        let rhs = rhs.ok_or_else(|| Error::Shape(format!("{} needs a right operand", self.token())))?;
        let width = match (lhs, rhs) {
            (a, b) if a == b => a,
            (1, b) => b,
            (a, 1) => a,
            (a, b) => {
                return Err(Error::Shape(format!(
                    "cannot broadcast operands of width {a} and {b} for {}",
                    self.token()
                )))
            }
        };
        Ok(if self == BinaryOp::Dot { 1 } else { width })
    }

    #[inline(always)]
    pub(crate) fn scalar(self, l: f32, r: f32) -> f32 {
        match self {
            BinaryOp::Add => l + r,
            BinaryOp::Sub => l - r,
            BinaryOp::Mul => l * r,
            BinaryOp::Div => l / r,
            BinaryOp::Dot => l * r,
            BinaryOp::CopyLhs => l,
        }
    }
}

impl fmt::Display for BinaryOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

/// Element-wise reduction of messages into a destination row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ReduceOp {
    Sum,
    Max,
    Min,
    Prod,
    /// Overwrites: the last message in the destination's canonical order wins.
    CopyLast,
}

impl ReduceOp {
    pub const ALL: [ReduceOp; 5] = [ReduceOp::Sum, ReduceOp::Max, ReduceOp::Min, ReduceOp::Prod, ReduceOp::CopyLast];

    pub fn token(self) -> &'static str {
        match self {
            ReduceOp::Sum => "add",
            ReduceOp::Max => "max",
            ReduceOp::Min => "min",
            ReduceOp::Prod => "mul",
            ReduceOp::CopyLast => "copy",
        }
    }

    pub fn from_token(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|op| op.token() == s)
    }

    pub fn identity(self) -> f32 {
        match self {
            ReduceOp::Sum | ReduceOp::CopyLast => 0.0,
            ReduceOp::Prod => 1.0,
            ReduceOp::Max => f32::NEG_INFINITY,
            ReduceOp::Min => f32::INFINITY,
        }
    }

    /// Max and Min keep the accumulator unless the new value strictly wins,
    /// so a NaN message never replaces a value.
    #[inline(always)]
    pub fn combine(self, acc: f32, val: f32) -> f32 {
        match self {
            ReduceOp::Sum => acc + val,
            ReduceOp::Prod => acc * val,
            ReduceOp::Max => {
                if val > acc {
                    val
                } else {
                    acc
                }
            }
            ReduceOp::Min => {
                if val < acc {
                    val
                } else {
                    acc
                }
            }
            ReduceOp::CopyLast => val,
        }
    }

    /// True when the result does not depend on the order messages arrive in.
    pub fn is_order_exact(self) -> bool {
        matches!(self, ReduceOp::Max | ReduceOp::Min | ReduceOp::CopyLast)
    }
}

impl fmt::Display for ReduceOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

#[inline(always)]
fn bcast(x: &[f32], i: usize) -> f32 {
    if x.len() == 1 {
        x[0]
    } else {
        x[i]
    }
}

/// Inner product with width-1 broadcasting, summed left to right in `f32`.
#[inline]
pub fn dot(lhs: &[f32], rhs: &[f32]) -> f32 {
    if lhs.len() == rhs.len() {
        lhs.iter().zip(rhs).fold(0.0, |acc, (l, r)| acc + l * r)
    } else {
        let w = lhs.len().max(rhs.len());
        (0..w).fold(0.0, |acc, i| acc + bcast(lhs, i) * bcast(rhs, i))
    }
}

/// Writes the message of `op` into `out`. Operand widths must already be
/// compatible and `out` sized by [`BinaryOp::output_width`].
#[inline]
pub(crate) fn apply_binary_into(op: BinaryOp, lhs: &[f32], rhs: &[f32], out: &mut [f32]) {
    match op {
        BinaryOp::CopyLhs => out.copy_from_slice(lhs),
        BinaryOp::Dot => out[0] = dot(lhs, rhs),
        _ if lhs.len() == rhs.len() => {
            for ((o, &l), &r) in out.iter_mut().zip(lhs).zip(rhs) {
                *o = op.scalar(l, r);
            }
        }
        _ => {
            for (i, o) in out.iter_mut().enumerate() {
                *o = op.scalar(bcast(lhs, i), bcast(rhs, i));
            }
        }
    }
}

/// Computes the message `lhs op rhs`, broadcasting a width-1 operand.
///
/// Division by zero follows IEEE semantics.
pub fn apply_binary(op: BinaryOp, lhs: &[f32], rhs: Option<&[f32]>) -> Result<Vec<f32>> {
    if lhs.is_empty() || rhs.is_some_and(|r| r.is_empty()) {
        return Err(Error::Shape("operands must have width at least 1".into()));
    }
    let width = op.output_width(lhs.len(), rhs.map(<[f32]>::len))?;
    let mut out = vec![0.0; width];
    apply_binary_into(op, lhs, rhs.unwrap_or(lhs), &mut out);
    Ok(out)
}

/// Reduces `val` into `acc` element-wise.
pub fn reduce_into(op: ReduceOp, acc: &[f32], val: &[f32]) -> Result<Vec<f32>> {
    if acc.len() != val.len() {
        return Err(Error::Shape(format!("cannot reduce width {} into width {}", val.len(), acc.len())));
    }
    Ok(acc.iter().zip(val).map(|(&a, &v)| op.combine(a, v)).collect())
}

pub fn identity_row(op: ReduceOp, dim: usize) -> Vec<f32> {
    vec![op.identity(); dim]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_examples() {
        assert_eq!(apply_binary(BinaryOp::Mul, &[1., 2., 3.], Some(&[4., 5., 6.])).unwrap(), [4., 10., 18.]);
        assert_eq!(apply_binary(BinaryOp::Dot, &[1., 2.], Some(&[3., 4.])).unwrap(), [11.]);
        assert_eq!(apply_binary(BinaryOp::CopyLhs, &[7., 8.], None).unwrap(), [7., 8.]);
        assert_eq!(apply_binary(BinaryOp::Sub, &[1., 2.], Some(&[3., 5.])).unwrap(), [-2., -3.]);
        assert_eq!(apply_binary(BinaryOp::Div, &[1., 6.], Some(&[4., 3.])).unwrap(), [0.25, 2.]);
    }

    #[test]
    fn broadcast_matches_replicated_operand() {
        // Oracle: replicate the width-1 operand by hand.
        let replicated = apply_binary(BinaryOp::Add, &[1., 2., 3.], Some(&[10., 10., 10.])).unwrap();
        assert_eq!(replicated, [11., 12., 13.]);
        assert_eq!(apply_binary(BinaryOp::Add, &[1., 2., 3.], Some(&[10.])).unwrap(), replicated);
        assert_eq!(apply_binary(BinaryOp::Sub, &[10.], Some(&[1., 2.])).unwrap(), [9., 8.]);
        assert_eq!(apply_binary(BinaryOp::Dot, &[2.], Some(&[1., 2., 3.])).unwrap(), [12.]);
    }

    #[test]
    fn incompatible_widths_fail() {
        assert!(matches!(apply_binary(BinaryOp::Add, &[1., 2.], Some(&[1., 2., 3.])), Err(Error::Shape(_))));
        assert!(matches!(apply_binary(BinaryOp::Add, &[1., 2.], None), Err(Error::Shape(_))));
    }

    #[test]
    fn division_by_zero_is_ieee() {
        let out = apply_binary(BinaryOp::Div, &[1., -1., 0.], Some(&[0., 0., 0.])).unwrap();
        assert_eq!(out[0], f32::INFINITY);
        assert_eq!(out[1], f32::NEG_INFINITY);
        assert!(out[2].is_nan());
    }

    #[test]
    fn reduce_examples() {
        assert_eq!(reduce_into(ReduceOp::Sum, &[1., 1.], &[2., 3.]).unwrap(), [3., 4.]);
        assert_eq!(reduce_into(ReduceOp::Max, &[5., -1.], &[2., 3.]).unwrap(), [5., 3.]);
        assert_eq!(reduce_into(ReduceOp::CopyLast, &[9., 9.], &[2., 3.]).unwrap(), [2., 3.]);
        assert_eq!(reduce_into(ReduceOp::Prod, &[2., 3.], &[2., 3.]).unwrap(), [4., 9.]);
        assert!(matches!(reduce_into(ReduceOp::Sum, &[1.], &[1., 2.]), Err(Error::Shape(_))));
    }

    #[test]
    fn identities() {
        assert_eq!(identity_row(ReduceOp::Sum, 3), [0., 0., 0.]);
        assert_eq!(identity_row(ReduceOp::Max, 2), [f32::NEG_INFINITY; 2]);
        assert_eq!(identity_row(ReduceOp::Min, 2), [f32::INFINITY; 2]);
        assert_eq!(identity_row(ReduceOp::Prod, 2), [1., 1.]);
        assert_eq!(identity_row(ReduceOp::CopyLast, 2), [0., 0.]);
    }

    #[test]
    fn nan_never_wins_max_or_min() {
        assert_eq!(ReduceOp::Max.combine(1.0, f32::NAN), 1.0);
        assert_eq!(ReduceOp::Min.combine(1.0, f32::NAN), 1.0);
    }

    #[test]
    fn tokens_round_trip() {
        for op in BinaryOp::ALL {
            assert_eq!(BinaryOp::from_token(op.token()), Some(op));
        }
        for op in ReduceOp::ALL {
            assert_eq!(ReduceOp::from_token(op.token()), Some(op));
        }
    }

    #[test]
    fn fmat_file_round_trip() {
        let m = FeatureMatrix::from_rows(&[[1.0f32, -2.5], [0.0, f32::MAX]]).unwrap();
        let mut buf = Vec::new();
        m.write_to(&mut buf).unwrap();
        assert_eq!(&buf[..5], b"FMAT1");
        assert_eq!(&buf[5..13], &2u64.to_le_bytes());
        assert_eq!(&buf[13..21], &2u64.to_le_bytes());
        assert_eq!(&buf[21..25], &1.0f32.to_le_bytes());
        assert_eq!(buf.len(), 21 + 16);
        assert_eq!(FeatureMatrix::read_from(&buf[..]).unwrap(), m);
        assert!(FeatureMatrix::read_from(&buf[..30]).is_err());
    }

    #[test]
    fn matrix_shape_checks() {
        assert!(FeatureMatrix::new(2, 2, vec![0.0; 3]).is_err());
        assert!(FeatureMatrix::new(2, 0, vec![]).is_err());
        assert!(FeatureMatrix::from_rows(&[vec![1.0], vec![1.0, 2.0]]).is_err());
        let m = FeatureMatrix::new(0, 4, vec![]).unwrap();
        assert_eq!((m.rows(), m.dim()), (0, 4));
    }
}
