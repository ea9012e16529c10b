//! Graph aggregation primitives for message passing on CSR graphs.
//!
//! The crate provides Copy-Reduce and Binary-Reduce over directed graphs with
//! dense per-node and per-edge feature matrices. Every aggregation can run
//! under four strategies:
//!
//! - [`Strategy::Push`]: parallel over source rows, scattering into
//!   destination rows guarded by striped locks.
//! - [`Strategy::Pull`]: parallel over destination rows, each owned by one
//!   worker, messages materialized into a scratch buffer before reduction.
//! - [`Strategy::BlockedPull`]: destination ownership plus a precomputed
//!   [`BlockPlan`] that blocks the source dimension, radix-sorts each block by
//!   source id and processes the feature dimension in column tiles.
//! - [`Strategy::RowParallelSpmm`]: a fused, unblocked row-parallel sparse-dense
//!   product used for full-graph processing.
//!
//! [`oracle`] holds a serial reference used to check all of the above.

// Casts between `Idx` and `u64` are no-ops when ids are 64-bit.
#![cfg_attr(feature = "index64", allow(clippy::unnecessary_cast))]

pub mod error;
pub mod feature;
pub mod gen;
pub mod graph;
pub mod io;
pub mod kernels;
pub mod oracle;

pub use error::{Error, Result};
pub use feature::{apply_binary, identity_row, reduce_into, BinaryOp, FeatureMatrix, ReduceOp};
pub use gen::{dataset_preset, generate, random_features, DatasetPreset, GeneratorKind, GeneratorSpec};
pub use graph::{
    build_csr, degree_stats, transpose, validate, CsrGraph, DegreeStats, EdgeList, Orientation, Violation,
};
pub use kernels::{
    build_block_plan, named_config, BlockPlan, BrConfig, Executor, Operand, Operands, Strategy, APPLICATION_CONFIGS,
};
pub use oracle::oracle_aggregate;

/// Node and edge identifier type.
#[cfg(not(feature = "index64"))]
pub type Idx = u32;
/// Node and edge identifier type.
#[cfg(feature = "index64")]
pub type Idx = u64;
