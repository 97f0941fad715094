//! Error type shared by the whole crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Shapes of the inputs do not match the operation's contract.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A matrix required to be symmetric is not, beyond tolerance.
    #[error("symmetry violation: {0}")]
    Asymmetric(String),

    /// An input violates a documented invariant; the message names it.
    #[error("invalid input: {0}")]
    Invalid(String),

    /// Arguments are outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A precondition of the operation does not hold at the given point.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A size guard was exceeded.
    #[error("capacity exceeded: {0}")]
    Capacity(String),

    /// The computation produced or met non-finite / numerically unusable
    /// values.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// The Hessian was numerically singular where an inverse was required.
    #[error("singular Hessian at iterate {iterate}: condition estimate {cond:.3e}")]
    SingularHessian { iterate: usize, cond: f64 },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
