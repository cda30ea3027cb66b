use std::path::PathBuf;

/// Broad failure category, used to pick a process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Data,
    Numerical,
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid data: {0}")]
    Data(String),

    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed header {}: {source}", path.display())]
    Header {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("payload length mismatch: expected {expected} bytes, found {actual}")]
    PayloadLength { expected: u64, actual: u64 },

    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("class {class} absent (every class in 1..={num_classes} must occur)")]
    ClassAbsent { class: u16, num_classes: u16 },

    #[error("label {label} exceeds class count {num_classes}")]
    LabelOutOfRange { label: u16, num_classes: u16 },

    #[error("dimension mismatch: expected {expected}, found {actual}")]
    DimensionMismatch { expected: String, actual: String },

    #[error("fewer than {requested} positive eigenvalues (achievable: {achievable})")]
    RankDeficient { requested: usize, achievable: usize },

    #[error("linear solver did not converge (relative residual {residual:e})")]
    SolverDiverged { residual: f64 },

    #[error("kernel system is not positive definite, even with jitter")]
    NotPositiveDefinite,

    #[error("kernel system residual {residual:e} exceeds tolerance {tolerance:e}")]
    ResidualTooLarge { residual: f64, tolerance: f64 },

    #[error("objective returned NaN at {position:?}")]
    ObjectiveNan { position: Vec<f64> },

    #[error("empty test split")]
    EmptyTestSplit,

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Config(_) | Error::EmptyTestSplit => ErrorKind::Config,
            Error::Data(_)
            | Error::Io { .. }
            | Error::Header { .. }
            | Error::PayloadLength { .. }
            | Error::NonFinite { .. }
            | Error::ClassAbsent { .. }
            | Error::LabelOutOfRange { .. }
            | Error::DimensionMismatch { .. } => ErrorKind::Data,
            Error::RankDeficient { .. }
            | Error::SolverDiverged { .. }
            | Error::NotPositiveDefinite
            | Error::ResidualTooLarge { .. }
            | Error::ObjectiveNan { .. } => ErrorKind::Numerical,
            Error::Stage { source, .. } => source.kind(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn dims(expected: impl ToString, actual: impl ToString) -> Self {
        Error::DimensionMismatch {
            expected: expected.to_string(),
            actual: actual.to_string(),
        }
    }

    pub(crate) fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
