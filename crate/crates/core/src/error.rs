use thiserror::Error;

/// Errors produced by the integrators, drivers and analysis tools.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A stage produced a non-finite component. `stage` is the recurrence
    /// index (`-1` for the correction term of the advection-aware scheme).
    #[error("divergence detected at stage {stage}")]
    Divergence { stage: i64 },

    #[error("divergence detected at step {step}: {source}")]
    StepFailed { step: usize, source: Box<Error> },

    #[error("stage cap exceeded: s = {0} > 500")]
    StageCapExceeded(usize),

    /// No stage count up to the cap covers `h * rho`; the caller must shrink `h`.
    #[error("reduce step: stability interval at s = 500 is {max_interval} < h*rho = {required}")]
    ReduceStep { max_interval: f64, required: f64 },

    #[error("reference unattainable at this stiffness: {0}")]
    ReferenceUnattainable(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
