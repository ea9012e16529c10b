//! Operand resolution and the inner loops shared by all strategies.

use std::marker::PhantomData;

use crate::feature::{apply_binary_into, dot, BinaryOp, FeatureMatrix, ReduceOp};
use crate::graph::Orientation;
use crate::Idx;

use super::config::{BrConfig, Operand};

/// Compile-time reduce operator, so the per-element combine is branch-free.
pub(crate) trait Reducer: Copy + Send + Sync + 'static {
    const OP: ReduceOp;
}

macro_rules! reducer {
    ($name:ident, $op:expr) => {
        #[derive(Clone, Copy)]
        pub(crate) struct $name;
        impl Reducer for $name {
            const OP: ReduceOp = $op;
        }
    };
}

reducer!(SumR, ReduceOp::Sum);
reducer!(MaxR, ReduceOp::Max);
reducer!(MinR, ReduceOp::Min);
reducer!(ProdR, ReduceOp::Prod);
reducer!(CopyLastR, ReduceOp::CopyLast);

/// Runs `$body` with `$R` bound to the reducer type matching `$op`.
macro_rules! with_reducer {
    ($op:expr, $R:ident => $body:expr) => {
        match $op {
            $crate::feature::ReduceOp::Sum => {
                type $R = $crate::kernels::job::SumR;
                $body
            }
            $crate::feature::ReduceOp::Max => {
                type $R = $crate::kernels::job::MaxR;
                $body
            }
            $crate::feature::ReduceOp::Min => {
                type $R = $crate::kernels::job::MinR;
                $body
            }
            $crate::feature::ReduceOp::Prod => {
                type $R = $crate::kernels::job::ProdR;
                $body
            }
            $crate::feature::ReduceOp::CopyLast => {
                type $R = $crate::kernels::job::CopyLastR;
                $body
            }
        }
    };
}
pub(crate) use with_reducer;

#[inline(always)]
pub(crate) fn accumulate<R: Reducer>(acc: &mut [f32], val: &[f32]) {
    for (a, &v) in acc.iter_mut().zip(val) {
        *a = R::OP.combine(*a, v);
    }
}

#[cfg(target_arch = "x86_64")]
fn has_avx2() -> bool {
    use std::sync::atomic::{AtomicU8, Ordering};
    static STATE: AtomicU8 = AtomicU8::new(0);
    match STATE.load(Ordering::Relaxed) {
        1 => false,
        2 => true,
        _ => {
            let yes = is_x86_feature_detected!("avx2");
            STATE.store(if yes { 2 } else { 1 }, Ordering::Relaxed);
            yes
        }
    }
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2")]
unsafe fn with_avx2<T>(f: impl FnOnce() -> T) -> T {
    f()
}

/// Runs `f` compiled for 256-bit vectors when the CPU has them. Work units
/// wrap their whole loop so the inlined inner loops pick up the wider
/// instructions. All inner loops are lane-wise or strictly ordered, so the
/// results are the same on either path.
#[inline(always)]
pub(crate) fn vectorized<T>(f: impl FnOnce() -> T) -> T {
    #[cfg(target_arch = "x86_64")]
    if has_avx2() {
        // SAFETY: the CPU supports AVX2.
        return unsafe { with_avx2(f) };
    }
    f()
}

/// Reduces the message `lhs binary rhs` straight into `acc` without
/// materializing it. `lhs` and `rhs` are either `acc`-wide or width 1.
#[inline(always)]
pub(crate) fn accumulate_binary<R: Reducer>(binary: BinaryOp, acc: &mut [f32], lhs: &[f32], rhs: &[f32]) {
    match binary {
        BinaryOp::CopyLhs => accumulate::<R>(acc, lhs),
        BinaryOp::Dot => acc[0] = R::OP.combine(acc[0], dot(lhs, rhs)),
        _ => match (lhs.len() == acc.len(), rhs.len() == acc.len()) {
            (true, true) => {
                for ((a, &l), &r) in acc.iter_mut().zip(lhs).zip(rhs) {
                    *a = R::OP.combine(*a, binary.scalar(l, r));
                }
            }
            (true, false) => {
                let r = rhs[0];
                for (a, &l) in acc.iter_mut().zip(lhs) {
                    *a = R::OP.combine(*a, binary.scalar(l, r));
                }
            }
            (false, true) => {
                let l = lhs[0];
                for (a, &r) in acc.iter_mut().zip(rhs) {
                    *a = R::OP.combine(*a, binary.scalar(l, r));
                }
            }
            (false, false) => {
                let m = binary.scalar(lhs[0], rhs[0]);
                for a in acc.iter_mut() {
                    *a = R::OP.combine(*a, m);
                }
            }
        },
    }
}

/// `row[c0..c1]`, or the whole row if it is a broadcast width-1 operand.
#[inline(always)]
pub(crate) fn window(row: &[f32], c0: usize, c1: usize) -> &[f32] {
    if row.len() == 1 {
        row
    } else {
        &row[c0..c1]
    }
}

/// (source, destination) of the nonzero `(row, col)` of a CSR.
#[inline(always)]
pub(crate) fn endpoints(orientation: Orientation, row: usize, col: usize) -> (usize, usize) {
    match orientation {
        Orientation::SrcMajor => (row, col),
        Orientation::DstMajor => (col, row),
    }
}

/// A validated aggregation: operand matrices resolved and message width known.
pub(crate) struct Job<'a> {
    pub cfg: BrConfig,
    lhs: &'a FeatureMatrix,
    rhs: Option<&'a FeatureMatrix>,
    pub width: usize,
}

impl<'a> Job<'a> {
    pub fn new(cfg: BrConfig, lhs: &'a FeatureMatrix, rhs: Option<&'a FeatureMatrix>, width: usize) -> Self {
        Job { cfg, lhs, rhs, width }
    }

    #[inline(always)]
    fn pick(op: Operand, src: usize, dst: usize, edge: usize) -> usize {
        match op {
            Operand::U => src,
            Operand::V => dst,
            Operand::E => edge,
        }
    }

    #[inline(always)]
    pub fn lhs_row(&self, src: usize, dst: usize, edge: usize) -> &'a [f32] {
        self.lhs.row(Self::pick(self.cfg.lhs, src, dst, edge))
    }

    /// Right operand row; for Copy-Reduce this is the left row, which the
    /// copy ignores.
    #[inline(always)]
    pub fn rhs_row(&self, src: usize, dst: usize, edge: usize) -> &'a [f32] {
        match (self.rhs, self.cfg.rhs) {
            (Some(m), Some(op)) => m.row(Self::pick(op, src, dst, edge)),
            _ => self.lhs_row(src, dst, edge),
        }
    }

    #[inline(always)]
    pub fn message_into(&self, src: usize, dst: usize, edge: usize, out: &mut [f32]) {
        apply_binary_into(self.cfg.binary, self.lhs_row(src, dst, edge), self.rhs_row(src, dst, edge), out);
    }

    /// Reduces the message of one edge into `acc` without a scratch buffer.
    #[inline(always)]
    pub fn fused<R: Reducer>(&self, src: usize, dst: usize, edge: usize, acc: &mut [f32]) {
        accumulate_binary::<R>(self.cfg.binary, acc, self.lhs_row(src, dst, edge), self.rhs_row(src, dst, edge));
    }

    /// As [`Job::fused`] restricted to output columns `c0..c1`.
    #[inline(always)]
    pub fn fused_window<R: Reducer>(&self, src: usize, dst: usize, edge: usize, c0: usize, c1: usize, acc: &mut [f32]) {
        let (l, r) = (self.lhs_row(src, dst, edge), self.rhs_row(src, dst, edge));
        if self.cfg.binary == BinaryOp::Dot {
            accumulate_binary::<R>(BinaryOp::Dot, acc, l, r);
        } else {
            accumulate_binary::<R>(self.cfg.binary, acc, window(l, c0, c1), window(r, c0, c1));
        }
    }

    /// Whether the message of a nonzero in `orientation` depends only on its
    /// row entity.
    pub fn message_depends_on_row_only(&self, orientation: Orientation) -> bool {
        let row_operand = match orientation {
            Orientation::SrcMajor => Operand::U,
            Orientation::DstMajor => Operand::V,
        };
        self.cfg.binary == BinaryOp::CopyLhs && self.cfg.lhs == row_operand
    }
}

/// Which entity of a nonzero a Copy-Reduce message is read from.
#[derive(Clone, Copy, PartialEq, Eq)]
pub(crate) enum CopyFrom {
    Row,
    Col,
    Edge,
}

impl<'a> Job<'a> {
    /// For Copy-Reduce, the copied matrix and which nonzero entity indexes it.
    pub fn copy_source(&self, orientation: Orientation) -> Option<(CopyFrom, &'a FeatureMatrix)> {
        if self.cfg.binary != BinaryOp::CopyLhs {
            return None;
        }
        let from = match (self.cfg.lhs, orientation) {
            (Operand::E, _) => CopyFrom::Edge,
            (Operand::U, Orientation::SrcMajor) | (Operand::V, Orientation::DstMajor) => CopyFrom::Row,
            _ => CopyFrom::Col,
        };
        Some((from, self.lhs))
    }
}

/// Shared mutable view of a slice for workers that write disjoint parts.
pub(crate) struct SharedSlice<'a, T> {
    ptr: *mut T,
    len: usize,
    _marker: PhantomData<&'a mut [T]>,
}

// SAFETY: access goes through `range_mut`, whose callers guarantee that no
// two threads touch overlapping ranges at the same time.
unsafe impl<T: Send> Send for SharedSlice<'_, T> {}
unsafe impl<T: Send> Sync for SharedSlice<'_, T> {}

impl<'a, T> SharedSlice<'a, T> {
    pub fn new(data: &'a mut [T]) -> Self {
        SharedSlice { ptr: data.as_mut_ptr(), len: data.len(), _marker: PhantomData }
    }

    /// # Safety
    ///
    /// No other live reference may overlap `start..start + len` for the
    /// lifetime of the returned slice.
    #[inline(always)]
    #[allow(clippy::mut_from_ref)]
    pub unsafe fn range_mut(&self, start: usize, len: usize) -> &mut [T] {
        assert!(start + len <= self.len, "range {start}+{len} out of bounds {}", self.len);
        std::slice::from_raw_parts_mut(self.ptr.add(start), len)
    }
}

/// Idx to usize.
#[inline(always)]
pub(crate) fn ix(i: Idx) -> usize {
    i as usize
}
