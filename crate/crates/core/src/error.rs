use std::fmt;

use crate::types::{MicroShape, Residency};

/// Names one of the three GEMM operands in diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Operand {
    A,
    B,
    C,
}

impl fmt::Display for Operand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Operand::A => "A",
            Operand::B => "B",
            Operand::C => "C",
        })
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension must be at least 1 (got {field} = 0)")]
    ZeroDimension { field: &'static str },

    #[error("operand {operand} has shape {rows}x{cols}, expected {want_rows}x{want_cols}")]
    DimensionMismatch {
        operand: Operand,
        rows: usize,
        cols: usize,
        want_rows: usize,
        want_cols: usize,
    },

    #[error("buffer too short: {detail}")]
    BufferTooShort { detail: String },

    #[error("residency {0:?} has no packed C layout")]
    UnsupportedResidency(Residency),

    #[error("unsupported plan: {0}")]
    UnsupportedPlan(String),

    #[error("invalid micro-kernel shape {shape} for {residency:?}: {reason}")]
    InvalidShape {
        shape: MicroShape,
        residency: Residency,
        reason: String,
    },

    #[error("element type mismatch: plan is {plan}, data is {data}")]
    ElemMismatch {
        plan: &'static str,
        data: &'static str,
    },

    #[error("invalid cache spec: {0}")]
    InvalidCacheSpec(String),

    #[error("cache too small at {level}: {detail}")]
    CacheTooSmall { level: &'static str, detail: String },

    #[error("micro-kernel grid is empty")]
    EmptyGrid,

    #[error("no recorded timing for shape {0}")]
    MissingTiming(MicroShape),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("verification failed for shape {0}")]
    VerificationFailed(MicroShape),

    #[error("tuning cache format version {found} is not supported (expected {expected})")]
    FormatVersionMismatch { found: u64, expected: u64 },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
