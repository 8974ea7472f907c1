use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("{what}: dimension {dim} exceeds the configured cap {cap}")]
    ResourceLimit {
        what: String,
        dim: usize,
        cap: usize,
    },

    #[error("operator is not Hermitian (max-abs asymmetry {residual:e})")]
    NotHermitian { residual: f64 },

    #[error("not a valid state: {0}")]
    NotAState(String),

    #[error("operator is not permutation invariant (residual {residual:e})")]
    NotPermutationInvariant { residual: f64 },

    #[error(
        "output is not supported on the symmetric subspace (residual {residual:e}); \
         use approx_reduced_general instead"
    )]
    NotSymmetricSupport { residual: f64 },

    #[error("integer overflow: {0}")]
    Overflow(String),
}

pub type Result<T> = std::result::Result<T, Error>;
