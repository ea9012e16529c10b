use std::io;

use crate::graph::Violation;
use crate::kernels::Operand;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("structural error: {0}")]
    Structural(String),

    #[error("invalid graph: {0}")]
    InvalidGraph(#[from] Violation),

    #[error("shape error: {0}")]
    Shape(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("missing feature matrix for operand {0}")]
    MissingOperand(Operand),

    #[error("block plan error: {0}")]
    Plan(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid generator spec: {0}")]
    InvalidSpec(String),

    #[error("unknown preset {0:?}")]
    UnknownPreset(String),

    #[error("oracle refuses graphs with more than {limit} edges (got {edges})")]
    OracleGuard { edges: usize, limit: usize },

    #[error("bad file format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}
