use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid spin family: {0}")]
    InvalidFamily(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite argument {0}")]
    NonFinite(f64),

    #[error("unsupported cumulant order {0} (only 2 and 4 are available)")]
    UnsupportedOrder(usize),

    #[error("factorisation requires c >= nu - 1 = {min}, got c = {c}")]
    CounterTermTooSmall { c: f64, min: f64 },

    #[error("magnetisation {m} lies outside the spin hull [-{hull}, {hull}]")]
    OutsideHull { m: f64, hull: f64 },

    #[error("solver did not converge after {iterations} iterations (best residual {residual:e})")]
    NoConvergence {
        iterations: usize,
        residual: f64,
        best: Vec<f64>,
    },

    #[error("stationary point rejected: residual {0:e} above tolerance")]
    NotStationary(f64),

    #[error("susceptibility diverges: denominator {0:e}")]
    Divergence(f64),

    #[error("operation needs nu = 2, model has nu = {0}")]
    NotBipartite(usize),

    #[error("{0}")]
    OutOfScope(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("enumeration needs {needed} sector evaluations, guard is {guard}")]
    SizeGuard { needed: u128, guard: u128 },

    #[error("root finding failed: {0}")]
    RootFinding(String),
}
