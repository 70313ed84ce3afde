use thiserror::Error;

/// Errors produced by the library and surfaced through the CLI.
///
/// The CLI maps variants to distinct exit codes: usage errors exit 2,
/// numerical-consistency failures exit 3, unsupported-range errors exit 4,
/// everything else exits 1.
#[derive(Debug, Error)]
pub enum Error {
    /// Input outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A quadrature did not meet its tolerance within the panel budget.
    /// Carries the best estimate and the achieved error bound.
    #[error("quadrature did not converge: {message} (estimate {estimate:e}, bound {bound:e})")]
    Quadrature {
        message: String,
        estimate: f64,
        bound: f64,
    },

    /// Parameters outside the range the double-precision pipeline supports.
    #[error("unsupported range: {0}")]
    UnsupportedRange(String),

    /// An internal cross-check failed (e.g. a provably positive quantity
    /// came out significantly negative).
    #[error("numerical consistency failure: {0}")]
    NumericalConsistency(String),

    /// The eigensolver failed to converge on a sample matrix.
    #[error("eigensolver failure: {0}")]
    Solver(String),

    /// No samples available where at least one is required.
    #[error("empty sample set: {0}")]
    EmptySample(String),

    /// Bad command-line input or configuration.
    #[error("usage error: {0}")]
    Usage(String),

    /// Malformed cache or config file.
    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code for the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) => 2,
            Error::NumericalConsistency(_) => 3,
            Error::UnsupportedRange(_) => 4,
            _ => 1,
        }
    }
}
