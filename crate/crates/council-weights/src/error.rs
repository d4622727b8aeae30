use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A model parameter violates one of the constraints of its coupling
    /// family. The message names the failed inequality.
    #[error("constraint violated: {0}")]
    Constraint(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// An operation was called outside the interaction regime it is valid in.
    #[error("regime error: {0}")]
    Regime(String),

    /// A linear system was singular within tolerance; carries the magnitude
    /// of the pivot that failed.
    #[error("singular system: pivot magnitude {pivot:e} at step {step}")]
    Singular { pivot: f64, step: usize },

    /// An iterative method did not converge.
    #[error("no convergence: {0}")]
    NoConvergence(String),

    /// The set of global minima of the free-energy function does not match
    /// any structure for which the optimal weights are characterised.
    #[error("unresolved minima structure: {0}")]
    UnresolvedMinima(String),

    /// A resource guard (enumeration size, sample count, ...) was exceeded.
    #[error("guard violated: {0}")]
    Guard(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("spec parse error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
