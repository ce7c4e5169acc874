use thiserror::Error;

use crate::ratlin::Rational;

/// Errors raised by the geometry, pushout and directed-system layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("cannot parse rational from {0:?}")]
    ParseRational(String),

    #[error("matrix is singular")]
    Singular,

    #[error("vectors are linearly dependent")]
    DependentVectors,

    #[error("vertex set does not span the ambient space (rank {rank} < dim {dim})")]
    DegenerateVertexSet { rank: usize, dim: usize },

    #[error("vertex set is not symmetric: {0}")]
    NotSymmetric(String),

    #[error("operator norm {norm} exceeds the admissibility bound {bound}")]
    NormBoundViolated { norm: Rational, bound: Rational },

    #[error("vertex count {count} exceeds the cap {cap}")]
    VertexCapExceeded { count: usize, cap: usize },

    #[error("invalid parameters: {0}")]
    InvalidParameters(String),

    #[error("stage {0} has not been built")]
    MissingStage(String),

    #[error("functional is not well defined: value {value} on kernel generator {generator}")]
    WellDefinedness { generator: usize, value: Rational },

    #[error("linear program failed: {0}")]
    Lp(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
