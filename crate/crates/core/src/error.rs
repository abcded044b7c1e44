use thiserror::Error;

/// Errors produced by graph queries, family builders and the scattering pipeline.
#[derive(Debug, Error)]
pub enum MtlzError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("constraint violated: {0}")]
    Constraint(String),

    #[error("graph error: {0}")]
    Graph(String),

    #[error("family data inconsistent: {0}")]
    Integrability(String),

    #[error("degenerate arrangement: {0}")]
    DegenerateArrangement(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("numerical propagation failed: {0}")]
    Propagation(String),
}

pub type Result<T> = std::result::Result<T, MtlzError>;
