use thiserror::Error;

/// Errors produced by the solver library.
#[derive(Debug, Error)]
pub enum SbfemError {
    /// Invalid construction argument (mesh counts, orders, quadrature sizes,
    /// angle ranges, load exponents).
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Evaluation point or index outside the admissible domain.
    #[error("out of domain: {0}")]
    OutOfDomain(String),

    /// Dimension mismatch between operators and vectors.
    #[error("size mismatch: {0}")]
    SizeMismatch(String),

    /// Cholesky factorization hit a non-positive pivot.
    #[error("matrix not positive definite: {0}")]
    NotPositiveDefinite(String),

    /// LU factorization found the matrix numerically singular.
    #[error("singular matrix: {0}")]
    Singular(String),

    /// Eigenvalue iteration failed to converge.
    #[error("eigenvalue iteration did not converge: {0}")]
    EigenFailure(String),

    /// Pencil eigenvalue fell below the negativity clamp.
    #[error("pencil eigenvalue {value} below the admissible clamp")]
    NegativeEigenvalue { value: f64 },

    /// Load exponent resonates with a pencil eigenvalue, so the pure-power
    /// particular solution does not exist.
    #[error("resonant load: {0}")]
    Resonance(String),

    /// A sampled value came out non-finite.
    #[error("non-finite sample: {0}")]
    NonFinite(String),

    /// A derivative was requested from a field that does not carry it.
    #[error("missing partial derivative: {0}")]
    MissingPartial(&'static str),
}

pub type Result<V> = std::result::Result<V, SbfemError>;
