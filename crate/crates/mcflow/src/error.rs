use thiserror::Error;

/// Crate-wide error type. Variants are grouped by the subsystem that raises
/// them so the CLI can map them onto exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid curve: {0}")]
    InvalidCurve(String),
    #[error("invalid profile: {0}")]
    InvalidProfile(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("center must lie on the symmetry axis for a surface of revolution: {0}")]
    OffAxisCenter(String),
    #[error("shooting failed: {0}")]
    Shooting(String),
    #[error("eigensolve failed: {0}")]
    Eigensolve(String),
    #[error("perturbation failed at property ({property}): {message}")]
    Perturbation {
        property: &'static str,
        message: String,
    },
    #[error("flow step failed: {0}")]
    Flow(String),
    #[error("trace unusable: {0}")]
    Trace(String),
    #[error("check rejected its input: {0}")]
    CheckRejected(String),
    #[error("pipeline stage '{stage}' failed: {source}")]
    Pipeline {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

impl Error {
    /// True for failures of an iterative numerical procedure (as opposed to
    /// bad input or a failed verification check).
    pub fn is_nonconvergence(&self) -> bool {
        matches!(
            self,
            Error::Shooting(_)
                | Error::Eigensolve(_)
                | Error::Perturbation { .. }
                | Error::Flow(_)
        ) || matches!(self, Error::Pipeline { source, .. } if source.is_nonconvergence())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
