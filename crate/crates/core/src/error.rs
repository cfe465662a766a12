use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },

    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },

    #[error("function `{name}` takes {expected} argument(s), got {found} (byte {offset})")]
    Arity {
        name: String,
        expected: usize,
        found: usize,
        offset: usize,
    },

    #[error("non-finite value {value} at x = {x}")]
    NonFinite { x: f64, value: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("hypotheses violated: {0}")]
    Validation(String),

    #[error("quadrature did not reach tolerance {tol:e} within {budget} subintervals (estimate {estimate:e})")]
    Quadrature { tol: f64, budget: usize, estimate: f64 },

    #[error("eigenvalue refinement exhausted at {grid_size} nodes (last change {last_change:e})")]
    RefinementBudget { grid_size: usize, last_change: f64 },

    #[error("first eigenvalue {lambda} on ({lo}, {hi}) is not positive")]
    NonPositiveEigenvalue { lo: f64, hi: f64, lambda: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for errors caused by bad inputs rather than failed computation.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Syntax { .. }
                | Error::UnknownIdentifier { .. }
                | Error::Arity { .. }
                | Error::InvalidInput(_)
                | Error::Validation(_)
                | Error::Config(_)
                | Error::Json(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
