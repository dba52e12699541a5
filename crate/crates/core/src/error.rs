use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied argument is outside the operation's domain.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// The computation ran but could not reach the requested accuracy.
    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("quadrature did not converge: {0}")]
    Convergence(String),

    #[error("eigensystem store: {0}")]
    Store(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn pre(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }

    pub(crate) fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }

    /// True for failures caused by bad input rather than by the numerics.
    pub fn is_precondition(&self) -> bool {
        matches!(self, Error::Precondition(_) | Error::Store(_) | Error::Io(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
