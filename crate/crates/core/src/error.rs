//! Error type shared by the whole crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid signature: p = {p}, q = {q}, r = {r:?}")]
    InvalidSignature { p: usize, q: usize, r: Option<usize> },

    #[error("the zero vector has no class")]
    ZeroVector,

    #[error("rank-deficient basis: smallest/largest singular value ratio {ratio:.3e}")]
    RankDeficient { ratio: f64 },

    #[error("eigensolver did not converge within the iteration cap")]
    EigenNonConvergence,

    #[error(
        "spectrum too clustered for Jordan analysis: min eigenvalue gap {gap:.3e}, required {required:.3e}"
    )]
    ClusteredSpectrum { gap: f64, required: f64 },

    #[error("operation requires a self map, but the matrix classifies as NotSelfMap")]
    NotSelfMap,

    #[error("operation requires an automorphism (a matrix scalable into U(p,q))")]
    NotAutomorphism,

    #[error("not an isometric embedding: Gram matrices differ by {deviation:.3e}")]
    GramMismatch { deviation: f64 },

    #[error("vector class mismatch: {0}")]
    ClassMismatch(String),

    #[error("plane meets the kernel: image rank collapsed")]
    RankCollapse,

    #[error("rejection sampling exhausted its attempt cap")]
    SamplingExhausted,

    #[error("search failed: {0}")]
    SearchFailed(String),

    #[error("invariant violated: {0}")]
    InvariantViolation(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}
