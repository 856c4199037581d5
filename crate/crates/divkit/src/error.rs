//! Error type shared by every module.

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// Mismatched lengths or matrix dimensions.
    #[error("shape error: {0}")]
    Shape(String),
    /// A field value outside the positivity class the operation needs.
    #[error("domain error{}: {msg}", index.map(|i| format!(" at index {i}")).unwrap_or_default())]
    Domain { index: Option<usize>, msg: String },
    /// A parameter outside its admissible range, or at a singular value.
    #[error("parameter error ({name}): {msg}")]
    Param { name: String, msg: String },
    /// The requested nominal factor has no closed form for this family.
    #[error("no closed-form factor: {0}")]
    NoClosedForm(String),
    /// The divergence does not split into a difference of two positive terms.
    #[error("not decomposable: {0}")]
    NotDecomposable(String),
    /// Line search failed to find an acceptable step.
    #[error("solver stalled: {0}")]
    Stall(String),
    /// A multiplicative update needs a strictly positive denominator.
    #[error("decomposition error: {0}")]
    Decomposition(String),
    /// The starting point violates the linear constraint.
    #[error("constraint error: {0}")]
    Constraint(String),
    /// The divergence handed to the invariant solver is not scale invariant.
    #[error("invariance error: {0}")]
    Invariant(String),
    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl Error {
    pub(crate) fn param(name: &str, msg: impl Into<String>) -> Self {
        Error::Param { name: name.to_string(), msg: msg.into() }
    }

    pub(crate) fn domain(index: usize, msg: impl Into<String>) -> Self {
        Error::Domain { index: Some(index), msg: msg.into() }
    }

    /// Whether the CLI should map this error to the configuration exit code.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Shape(_)
                | Error::Domain { .. }
                | Error::Param { .. }
                | Error::NoClosedForm(_)
                | Error::NotDecomposable(_)
                | Error::Constraint(_)
                | Error::Invariant(_)
                | Error::Io(_)
        )
    }
}
