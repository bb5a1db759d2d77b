use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("factorization failed: {0}")]
    Factorization(String),

    #[error("spectrum overlap: |λᵢ + μⱼ| = {gap:e} is below the threshold {threshold:e}")]
    SpectrumOverlap { gap: f64, threshold: f64 },

    #[error("singular system: {0}")]
    Singular(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("operation not supported: {0}")]
    Unsupported(String),

    #[error("commutator has numerical rank {rank}, above the cap {cap}")]
    NotLowRankCommuting { rank: usize, cap: usize },

    #[error("Neumann series diverged after {terms} terms (last residual {last_residual:e})")]
    Divergence { terms: usize, last_residual: f64 },

    #[error("inner solver failed: {0}")]
    InnerSolver(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("dimension {n} exceeds the dense limit {limit}")]
    TooLarge { n: usize, limit: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
