use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the structural analysis routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum StructuralError {
    #[error("invalid structural model: {0}")]
    Invalid(String),
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("equation `{0}` is not part of the equation set")]
    NotInSet(String),
    #[error("no complete matching; unmatched variables: {}", .0.join(", "))]
    Unmatched(Vec<String>),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    Config(String),
    #[error("unknown fault `{0}`")]
    UnknownFault(String),
    #[error("fault `{id}`: {msg}")]
    Fault { id: String, msg: String },
    #[error("non-finite state at t = {t}")]
    NonFinite { t: f64 },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PnnError {
    #[error("dataset is missing channel `{0}`")]
    MissingChannel(String),
    #[error("invalid architecture: {0}")]
    Architecture(String),
    #[error("invalid training config: {0}")]
    Config(String),
    #[error("empty input")]
    Empty,
    #[error("length mismatch: {0} vs {1}")]
    Length(usize, usize),
    #[error("standard deviation must be positive, got {0}")]
    NonPositiveStd(f64),
    #[error("training diverged at epoch {epoch} (loss = {loss})")]
    Diverged { epoch: usize, loss: f64 },
    #[error("horizon {horizon} exceeds sequence length {len}")]
    Horizon { horizon: usize, len: usize },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnsembleError {
    #[error("empty ensemble")]
    Empty,
    #[error("empty trace")]
    EmptyTrace,
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("negative variance {0}")]
    NegativeVariance(f64),
    #[error("members disagree on {0}")]
    Incompatible(&'static str),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DecisionError {
    #[error("probability must lie in (0, 1), got {0}")]
    Probability(f64),
    #[error("non-finite input: {0}")]
    NonFinite(&'static str),
    #[error("{0} must be positive")]
    NonPositive(&'static str),
    #[error("empty trace")]
    Empty,
    #[error("residual {0} alarms but is sensitive to no fault")]
    Unexplainable(usize),
    #[error("shape mismatch: {0}")]
    Shape(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("degenerate fault signature matrix: {0} is an empty average")]
    Degenerate(&'static str),
    #[error("no {0} scenario to evaluate")]
    MissingScenario(&'static str),
    #[error("scenario `{0}` has no true-fault label in the fault list")]
    Unlabeled(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
}

/// Crate-level error.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Structural(#[from] StructuralError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Pnn(#[from] PnnError),
    #[error(transparent)]
    Ensemble(#[from] EnsembleError),
    #[error(transparent)]
    Decision(#[from] DecisionError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("config error at `{path}`: {msg}")]
    Config { path: String, msg: String },
    #[error("data error: {0}")]
    Data(String),
    #[error("missing checkpoint {0}")]
    MissingCheckpoint(PathBuf),
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn config(path: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            msg: msg.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad user input rather than a runtime failure.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Config { .. }
                | Error::Structural(StructuralError::Invalid(_) | StructuralError::Parse { .. })
                | Error::Sim(SimError::Config(_) | SimError::UnknownFault(_) | SimError::Fault { .. })
                | Error::Pnn(PnnError::Architecture(_) | PnnError::Config(_))
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
