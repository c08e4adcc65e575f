use thiserror::Error;

/// Errors raised by the design, link and simulation layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is not positive definite (leading minor {minor} has pivot {pivot:e})")]
    NotPositiveDefinite { minor: usize, pivot: f64 },

    #[error("matrix is rank deficient (smallest/largest singular value ratio {ratio:e})")]
    RankDeficient { ratio: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("requested {streams} streams but channel rank is {rank}")]
    StreamsExceedRank { streams: usize, rank: usize },

    #[error("objective {0} has no power-allocation rule in this branch")]
    UnsupportedObjective(String),

    #[error("operation requires a {expected} design, got {found}")]
    SchemeMismatch { expected: &'static str, found: &'static str },
}

pub type Result<T> = std::result::Result<T, Error>;
