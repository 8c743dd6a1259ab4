//! Crate-wide error type.

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced by construction, evaluation, integration, fitting, and
/// sampling.
#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    /// A constructor was given a parameter outside its legal range.
    #[error("parameter out of range: {0}")]
    Parameter(String),

    /// An operation was evaluated outside its domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// Adaptive integration could not reach the requested tolerance.
    #[error(
        "integration failed to converge: best estimate {best_estimate} \
         (error estimate {error_estimate}, {evaluations} evaluations)"
    )]
    IntegrationFailure {
        best_estimate: f64,
        error_estimate: f64,
        evaluations: usize,
    },

    /// The joint survival mass of the conditioning event is below the
    /// representable floor, so the conditional expectation is undefined
    /// at double precision.
    #[error("degenerate joint tail: {0}")]
    DegenerateTail(String),

    /// Too few Monte Carlo samples landed in the joint tail.
    #[error(
        "insufficient tail mass: {accepted} of {total} samples accepted \
         (need at least {required}); increase n or lower the levels"
    )]
    InsufficientTailMass {
        accepted: usize,
        required: usize,
        total: usize,
    },

    /// A bracketed root search failed to converge.
    #[error("root find failed: {0}")]
    RootFind(String),

    /// Kendall's tau falls outside the attainable range of a copula family.
    #[error("tau {tau} outside the attainable range of the {family} family")]
    TauRange { family: String, tau: f64 },

    /// One or more pairs could not be fitted during a pairwise fit.
    #[error("pairwise fit failed for {family}: tau out of range for {pairs:?}")]
    PairwiseFit {
        family: String,
        pairs: Vec<(String, String)>,
    },

    /// Input data could not be ingested.
    #[error("ingestion error at row {row}: {what}")]
    Ingestion { row: usize, what: String },
}

impl Error {
    pub(crate) fn parameter(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
