//! Crate-wide error type.

use std::path::PathBuf;

/// Errors produced anywhere in the valuation pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at {path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("corpus is empty after filtering (thresholds too strict?)")]
    EmptyCorpus,

    #[error("{what} index {index} out of range (< {bound} expected)")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        bound: usize,
    },

    #[error("dimension mismatch in {op}: expected {expected}, got {got}")]
    DimensionMismatch {
        op: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("exact enumeration supports at most {max} players, got {got}")]
    TooManyPlayers { max: usize, got: usize },

    #[error("subset sampling needs at least 2 players, got {got}")]
    TooFewPlayers { got: usize },

    #[error("non-finite loss at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },

    #[error("non-finite gradient in parameter block `{block}`")]
    NonFiniteGradient { block: String },

    #[error("user `{user}` has only {available} eligible items, {needed} needed for injection")]
    InjectionShortfall {
        user: String,
        available: usize,
        needed: usize,
    },

    #[error("no score for interaction (user {user}, item {item})")]
    MissingScore { user: usize, item: usize },

    #[error("pruning removed every interaction; nothing left to retrain on")]
    EmptyRetainedSet,

    #[error("no candidate items to rank for user {user}")]
    EmptyCandidatePool { user: usize },

    #[error("value report and noise ledger describe different corpora: {detail}")]
    CorpusMismatch { detail: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("missing artifact {path}; run `{command}` first")]
    MissingArtifact { path: PathBuf, command: String },

    #[error("malformed artifact {path}: {message}")]
    MalformedArtifact { path: PathBuf, message: String },

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Process exit code the CLI maps this error to.
    ///
    /// 2 for data/config problems, 3 for numeric failures (usage errors
    /// exit 1 before any `Error` is constructed).
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NonFiniteLoss { .. } | Error::NonFiniteGradient { .. } => 3,
            Error::Stage { source, .. } => source.exit_code(),
            _ => 2,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
