use thiserror::Error;

/// Errors reported by every fallible operation in the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error in {op}: {detail}")]
    Domain { op: &'static str, detail: String },

    /// An iterative solver hit its iteration cap without meeting tolerance.
    #[error("{op} did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence {
        op: &'static str,
        iterations: usize,
        residual: f64,
    },

    /// The box is completely empty or completely full; the count is 1 and no tilt exists.
    #[error("degenerate input for {op}: n = {n} is 0 or l*m (exact count is 1)")]
    Degenerate { op: &'static str, n: u64 },

    /// The requested coefficient vector is larger than the configured cap.
    #[error("coefficient vector needs {required} entries, cap is {cap}")]
    CapExceeded { required: u64, cap: u64 },

    /// An index outside the range where the operation is defined.
    #[error("range error in {op}: {detail}")]
    Range { op: &'static str, detail: String },

    /// Exponential-cost or memory-heavy oracle refused to run at this size.
    #[error("size guard in {op}: {detail}")]
    SizeGuard { op: &'static str, detail: String },

    /// Rejection sampling gave up.
    #[error("rejection sampler exhausted {tries} tries with {hits} hits")]
    TriesExhausted { tries: u64, hits: u64 },

    /// A covariance matrix that should be positive definite is not.
    #[error("singular covariance matrix (determinant {det:e})")]
    Singular { det: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(op: &'static str, detail: impl Into<String>) -> Error {
    Error::Domain {
        op,
        detail: detail.into(),
    }
}
