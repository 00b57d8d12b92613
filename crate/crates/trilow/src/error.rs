use thiserror::Error;

/// Errors produced by the library.
#[derive(Error, Debug)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("zero tensor has no spectral direction")]
    ZeroTensor,

    #[error("matrix is not orthogonal (deviation {0:.3e})")]
    NotOrthogonal(f64),

    #[error("rank {r} out of range 1..={max}")]
    RankOutOfRange { r: usize, max: usize },

    #[error("moment sequence is not flat: rank M_{{k-1}} = {low}, rank M_k = {high}")]
    NotFlat { low: usize, high: usize },

    #[error("atom extraction failed: {0}")]
    ExtractionFailed(String),

    #[error("ill-conditioned decomposition: neither well-conditioning condition holds")]
    IllConditioned,

    #[error("coefficient refinement unavailable: {0}")]
    RefinementUnavailable(String),

    #[error("{0}")]
    Io(String),
}
