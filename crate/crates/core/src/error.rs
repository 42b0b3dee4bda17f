use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("point is outside the open unit ball (|z| = {modulus})")]
    OutsideBall { modulus: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("integral diverges: {0}")]
    Divergent(String),
    #[error("series not converged after {terms} terms (tail bound {tail_bound:e})")]
    SeriesTruncation { terms: usize, tail_bound: f64 },
    #[error("degenerate coefficient c_k({param}) = 0 at k = {k}")]
    DegenerateCoefficient { param: f64, k: usize },
    #[error("rejection sampling gave up after {attempts} attempts")]
    RejectionBudget { attempts: usize },
    #[error("fit refused: {0}")]
    FitRefused(String),
    #[error("empty candidate family")]
    EmptyFamily,
}

pub type Result<T> = std::result::Result<T, Error>;
