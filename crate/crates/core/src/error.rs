use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Invalid user-supplied parameters (domain sizes, exponents, tolerances).
    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Parse(#[from] crate::expr::ParseError),

    /// An expression could not be evaluated at a grid node.
    #[error("sampling error at node {node} ({x}, {y}): {message}")]
    Sampling {
        node: usize,
        x: f64,
        y: f64,
        message: String,
    },

    /// Fields from different domains were combined.
    #[error("usage error: {0}")]
    Usage(String),

    /// Iterative method failed to converge or broke down.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// A hypothesis checker produced a non-finite residual.
    #[error("checker error: non-finite residual at s = {s}")]
    Checker { s: f64 },

    /// A bound was requested for data that does not satisfy its hypotheses.
    #[error("precondition failed: {message} (margin = {margin})")]
    Precondition { message: String, margin: f64 },

    /// Lower bound requested for M(0) = 0.
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// Blow-up time extrapolation had too little tail data.
    #[error("estimation error: {0}")]
    Estimation(String),

    /// High-energy data construction exceeded its amplitude cap.
    #[error("construction failure: {0}")]
    Construction(String),
}
