use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("operator is not monotone: {0}")]
    NotMonotone(String),

    #[error("design error: {0}")]
    Design(String),

    #[error("stepsize bound violated: {0}")]
    Bound(String),

    #[error("infeasible pattern: {0}")]
    InfeasiblePattern(String),

    #[error("selection failed: {0}")]
    Selection(String),

    #[error("iterates diverged at iteration {iteration}: {reason}")]
    Divergence { iteration: usize, reason: String },

    #[error("subproblem did not converge within {0} iterations")]
    SubproblemNonConvergence(usize),

    #[error("graph construction failed: {0}")]
    Graph(String),

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error("io error: {0}")]
    Io(String),

    #[error("insufficient trace: {0}")]
    InsufficientTrace(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub(crate) fn shape_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Shape(msg.into()))
}
