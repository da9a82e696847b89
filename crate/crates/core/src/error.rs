use thiserror::Error;

/// Errors raised by the solvers and their building blocks.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument fell outside its admissible range.
    #[error("domain error: {0}")]
    Domain(String),

    /// A convex intersection turned out to be (numerically) empty.
    #[error("infeasible set: {0}")]
    InfeasibleSet(String),

    /// An inner resolvent solve failed.
    #[error("operator error: {0}")]
    Operator(String),

    /// The requested closed form is not available for this operator variant.
    #[error("not implemented: {0}")]
    NotImplemented(String),

    /// A rule needed by the caller (e.g. a minimal section) is missing.
    #[error("capability error: {0}")]
    Capability(String),

    /// A lemma hypothesis failed on the supplied data.
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    /// A selected value left the admissible set.
    #[error("selection error: {0}")]
    Selection(String),

    /// A computed quantity violated a bound the scheme guarantees.
    #[error("internal consistency violation: {0}")]
    Consistency(String),

    /// An iterative loop hit its cap; the distance history is attached.
    #[error("did not converge after {history:?} ({message})")]
    NonConvergence { message: String, history: Vec<f64> },

    /// A quadrature refinement loop hit its cap.
    #[error("quadrature error: {0}")]
    Quadrature(String),

    /// Parameters make the problem degenerate (e.g. a vanishing mu0).
    #[error("degenerate parameters: {0}")]
    DegenerateParameters(String),
}

pub type Result<T> = std::result::Result<T, Error>;
