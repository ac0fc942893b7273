use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("{operation} requires {expected} observations")]
    WrongMode {
        operation: &'static str,
        expected: &'static str,
    },

    #[error("entry ({i}, {j}) = {value} is not strictly positive")]
    NonPositive { i: usize, j: usize, value: f64 },

    #[error("exp({log_ratio}) for pair ({i}, {j}) is not representable as a positive f64")]
    Overflow { i: usize, j: usize, log_ratio: f64 },

    #[error("power iteration did not converge after {iterations} iterations (residual {residual:e})")]
    EigenNotConverged { iterations: usize, residual: f64 },

    #[error(
        "conjugate gradient did not converge after {iterations} iterations \
         (relative residual {relative_residual:e})"
    )]
    CgNotConverged {
        iterations: usize,
        relative_residual: f64,
    },

    #[error(
        "MLE does not exist: item {item} is never beaten by the rest of its component; \
         set a positive l2 strength to regularize"
    )]
    MleDoesNotExist { item: usize },

    #[error("likelihood ascent diverged at iteration {iteration}")]
    Diverged { iteration: usize },

    #[error("likelihood ascent stopped after {iterations} iterations with gradient norm {grad_norm:e}")]
    BtlNotConverged { iterations: usize, grad_norm: f64 },

    #[error("loss became non-finite at epoch {epoch}")]
    NonFiniteLoss { epoch: usize },

    #[error("observation set is empty")]
    EmptyObservations,

    #[error("ranking is degenerate: {0}")]
    DegenerateRanking(String),

    #[error("dense output for n = {n} exceeds the limit of {limit} alternatives")]
    DenseLimit { n: usize, limit: usize },

    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
