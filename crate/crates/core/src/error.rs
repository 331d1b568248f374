use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected} values, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("objective returned a non-finite value at x = {x}")]
    NonFinite { x: f64 },

    #[error("could not place {requested} non-overlapping instances after {attempts} attempts")]
    PackingFailed { requested: usize, attempts: usize },

    #[error("ground truth is empty")]
    EmptyGroundTruth,

    #[error("missing loss component `{0}`")]
    MissingComponent(&'static str),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
