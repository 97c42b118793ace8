use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse grouping used by the CLI to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Data,
    Divergence,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("invalid geometry for {geoid:?}: {reason}")]
    Geometry {
        geoid: Option<String>,
        reason: String,
    },

    #[error("duplicate geoid {0}")]
    DuplicateGeoid(String),

    #[error("invalid geoid {geoid:?}: {reason}")]
    Geoid { geoid: String, reason: String },

    #[error("record geoid {record} does not belong to bag {bag}")]
    GeoidMismatch { bag: String, record: String },

    #[error("empty training set")]
    EmptyTrainingSet,

    #[error("vocabulary is empty")]
    EmptyVocabulary,

    #[error("unit {geoid} has zero {what}; normalized scheme undefined")]
    ZeroTotal { geoid: String, what: &'static str },

    #[error("{transform} cannot be applied to {scheme} features")]
    InvalidPairing {
        scheme: &'static str,
        transform: &'static str,
    },

    #[error("no idf value for feature index {0}")]
    MissingIdf(usize),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("SGD diverged at epoch {epoch}, step {step}")]
    Diverged { epoch: usize, step: u64 },

    #[error("every grid combination diverged")]
    AllDiverged,

    #[error("degenerate target for unit {geoid}: {reason}")]
    DegenerateTarget { geoid: String, reason: String },

    #[error("model variant mismatch: expected {expected}, model is {found}")]
    VariantMismatch {
        expected: &'static str,
        found: &'static str,
    },

    #[error("missing {what} for unit {geoid}")]
    MissingTruth { geoid: String, what: String },

    #[error("invalid demographics for {geoid}: {reason}")]
    InvalidTruth { geoid: String, reason: String },

    #[error("unknown demographic variable {0:?}")]
    UnknownVariable(String),

    #[error("need at least {needed} units, found {found}")]
    TooFewUnits { needed: usize, found: usize },

    #[error("{0}")]
    Statistic(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("stage {stage} failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(line: usize, reason: impl Into<String>) -> Self {
        Error::Parse {
            line,
            reason: reason.into(),
        }
    }

    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Config(_) | Error::InvalidPairing { .. } => ErrorKind::Config,
            Error::Diverged { .. } | Error::AllDiverged => ErrorKind::Divergence,
            Error::Stage { source, .. } => source.kind(),
            _ => ErrorKind::Data,
        }
    }
}
