use thiserror::Error;

/// Errors produced by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate triangle {index} (signed area {area:e})")]
    DegenerateTriangle { index: usize, area: f64 },

    #[error("integrand returned a non-finite value at ({x}, {y})")]
    NonFiniteIntegrand { x: f64, y: f64 },

    #[error("adaptive quadrature budget exhausted (estimated error {estimate:e}, requested {requested:e})")]
    QuadratureBudget { estimate: f64, requested: f64 },

    #[error("matrix is not positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("eigensolver did not converge within {iterations} iterations (worst residual {residual:e})")]
    EigenNotConverged { iterations: usize, residual: f64 },

    #[error("eigenvalue gap between lambda_{below} = {lower} and lambda_{above} = {upper} is below tolerance")]
    SpectralGap {
        below: usize,
        above: usize,
        lower: f64,
        upper: f64,
    },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("missing input: {0}")]
    MissingInput(String),

    #[error("{0}")]
    Minimax(#[from] crate::minimax::MinimaxError),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
