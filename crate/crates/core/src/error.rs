use thiserror::Error;

/// Errors raised by the inference engine.
///
/// Each variant maps to a distinct CLI exit code; see [`Error::exit_code`].
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Malformed input: parse failures, unknown nodes, broken invariants.
    #[error("invalid input: {0}")]
    Input(String),
    /// The problem exceeds a documented size limit.
    #[error("capability exceeded: {0}")]
    Capability(String),
    /// A theorem's premise does not hold for the requested reduction.
    #[error("hypothesis not satisfied: {0}")]
    Hypothesis(String),
    /// The model itself is inconsistent, e.g. an empty credal set.
    #[error("model error: {0}")]
    Model(String),
    /// An iterative method ran out of iterations.
    #[error("no convergence: {0}")]
    Convergence(String),
    /// The quantity is undefined under the requested rule.
    #[error("not computable: {0}")]
    NotComputable(String),
}

impl Error {
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Input(_) => 2,
            Error::Capability(_) => 3,
            Error::Hypothesis(_) => 4,
            Error::Model(_) | Error::Convergence(_) | Error::NotComputable(_) => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn input<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Input(msg.into()))
}

pub(crate) fn hypothesis<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Hypothesis(msg.into()))
}

pub(crate) fn capability<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Capability(msg.into()))
}
