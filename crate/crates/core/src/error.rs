use thiserror::Error;

/// Errors raised by the comb calculus and its numerical checks.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("factor {factor} is invalid: {reason}")]
    Factor { factor: usize, reason: String },

    #[error("unknown factor label {0:?}")]
    UnknownLabel(String),

    #[error("matrix is not Hermitian (residual {residual:.3e})")]
    NotHermitian { residual: f64 },

    #[error("matrix is not unitary (residual {residual:.3e})")]
    NotUnitary { residual: f64 },

    #[error("Kraus operators are not complete (residual {residual:.3e})")]
    IncompleteKraus { residual: f64 },

    #[error("operator is not positive semidefinite (min eigenvalue {min_eigenvalue:.3e})")]
    NotPositive { min_eigenvalue: f64 },

    #[error("channel is not trace preserving (residual {residual:.3e})")]
    NotTracePreserving { residual: f64 },

    #[error("not a density matrix: {0}")]
    NotAState(String),

    #[error("operator is not covariant (residual {residual:.3e})")]
    NotCovariant { residual: f64 },

    #[error("dimension d = {d} outside supported range {min}..={max}")]
    UnsupportedDimension { d: usize, min: usize, max: usize },

    #[error("state is not maximally entangled (residual {residual:.3e})")]
    NotMaximallyEntangled { residual: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("comb normalization violated: {0}")]
    Normalization(String),

    #[error(
        "no convergence after {iterations} iterations \
         (best value {best_value}, residual {residual:.3e})"
    )]
    NonConvergence {
        iterations: usize,
        best_value: f64,
        residual: f64,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

/// Rejects gate dimensions outside `min..=max`.
pub(crate) fn check_dimension(d: usize, min: usize, max: usize) -> Result<()> {
    if d < min || d > max {
        Err(Error::UnsupportedDimension { d, min, max })
    } else {
        Ok(())
    }
}
