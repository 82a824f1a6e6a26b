use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on an argument was violated.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Adaptive quadrature failed to reach its tolerance.
    #[error("solver failure: {0}")]
    SolverFailure(String),

    /// A functional or test function produced a non-finite value.
    #[error("non-finite evaluation {value} at {context}")]
    Evaluation { value: f64, context: String },

    /// The random environment violated a modelling assumption (e.g. tied weights).
    #[error("environment fault: {0}")]
    Fault(String),

    /// Exhaustive enumeration was requested beyond the supported size.
    #[error("enumeration over {n} coordinates exceeds the cap of {cap}")]
    EnumerationCap { n: usize, cap: usize },
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
