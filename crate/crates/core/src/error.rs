use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("mode index {index} out of range for {modes} modes")]
    IndexOutOfRange { index: usize, modes: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfiguration(String),

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("invalid block key: {0}")]
    InvalidKey(String),

    #[error("invalid arguments: {0}")]
    InvalidArguments(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("structure violation: off-block residual {residual:.3e} exceeds {tol:.1e}")]
    StructureViolation { residual: f64, tol: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True when the request was well-formed but exceeds a size limit.
    pub fn is_capacity(&self) -> bool {
        matches!(self, Error::Capacity(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
