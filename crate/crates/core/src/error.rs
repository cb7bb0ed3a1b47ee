use std::path::PathBuf;

use crate::graph::Pair;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("malformed line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },

    #[error("self loop on line {line}")]
    SelfLoop { line: usize },

    #[error("node {node} out of range for graph with {n} nodes")]
    NodeOutOfRange { node: usize, n: usize },

    #[error("pair ({0}, {0}) is a self pair")]
    SelfPair(usize),

    #[error("feature file has {found} rows, expected {expected}")]
    RowCountMismatch { expected: usize, found: usize },

    #[error("ragged feature row on line {line}: expected {expected} values, found {found}")]
    RaggedRow { line: usize, expected: usize, found: usize },

    #[error("non-finite value on line {line}")]
    NonFiniteValue { line: usize },

    #[error("missing file {0}")]
    MissingFile(String),

    #[error("negative set for {set} has {found} lists, expected one per positive ({expected})")]
    NegCountMismatch { set: String, expected: usize, found: usize },

    #[error("negative pair ({}, {}) in {set} duplicates a positive pair", .pair.0, .pair.1)]
    NegativeIsPositive { set: String, pair: Pair },

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimMismatch { expected: usize, found: usize },

    #[error("tape does not match the network it is replayed against")]
    TapeMismatch,

    #[error("duplicate expert name {0:?}")]
    DuplicateName(String),

    #[error("unknown heuristic {0:?}")]
    UnknownHeuristic(String),

    #[error("conflicting scores for pair ({}, {}) on line {line}", .pair.0, .pair.1)]
    ConflictingDuplicate { line: usize, pair: Pair },

    #[error("non-finite score on line {line}")]
    NonFiniteScore { line: usize },

    #[error("no node features available (feature dimension is zero or features were not supplied)")]
    NoFeatures,

    #[error("expert {expert:?} has no score for pair ({}, {})", .pair.0, .pair.1)]
    MissingScore { expert: String, pair: Pair },

    #[error("expert registry is empty")]
    EmptyRegistry,

    #[error("gate input does not match gate mode {mode}: {reason}")]
    ModeInputMismatch { mode: String, reason: String },

    #[error("split would leave an empty side ({train} train / {val} val)")]
    EmptySplit { train: usize, val: usize },

    #[error("no negative examples to train against")]
    NoNegatives,

    #[error("no positive pairs to evaluate")]
    EmptyPositives,

    #[error("no negative scores to rank against")]
    EmptyNegatives,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("bad checkpoint: {0}")]
    Checkpoint(String),

    #[error("{}: {source}", .path.display())]
    AtPath {
        path: PathBuf,
        #[source]
        source: Box<Error>,
    },

    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Strips any file-path context and returns the underlying error.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtPath { source, .. } => source.root(),
            other => other,
        }
    }

    /// Stable upper-case identifier of the error kind, ignoring path context.
    pub fn code(&self) -> &'static str {
        match self.root() {
            Error::MalformedLine { .. } => "MALFORMED_LINE",
            Error::SelfLoop { .. } => "SELF_LOOP",
            Error::NodeOutOfRange { .. } => "NODE_OUT_OF_RANGE",
            Error::SelfPair(_) => "SELF_PAIR",
            Error::RowCountMismatch { .. } => "ROW_COUNT_MISMATCH",
            Error::RaggedRow { .. } => "RAGGED_ROW",
            Error::NonFiniteValue { .. } => "NON_FINITE_VALUE",
            Error::MissingFile(_) => "MISSING_FILE",
            Error::NegCountMismatch { .. } => "NEG_COUNT_MISMATCH",
            Error::NegativeIsPositive { .. } => "NEGATIVE_IS_POSITIVE",
            Error::DimMismatch { .. } => "DIM_MISMATCH",
            Error::TapeMismatch => "TAPE_MISMATCH",
            Error::DuplicateName(_) => "DUPLICATE_NAME",
            Error::UnknownHeuristic(_) => "UNKNOWN_HEURISTIC",
            Error::ConflictingDuplicate { .. } => "CONFLICTING_DUPLICATE",
            Error::NonFiniteScore { .. } => "NON_FINITE_SCORE",
            Error::NoFeatures => "NO_FEATURES",
            Error::MissingScore { .. } => "MISSING_SCORE",
            Error::EmptyRegistry => "EMPTY_REGISTRY",
            Error::ModeInputMismatch { .. } => "MODE_INPUT_MISMATCH",
            Error::EmptySplit { .. } => "EMPTY_SPLIT",
            Error::NoNegatives => "NO_NEGATIVES",
            Error::EmptyPositives => "EMPTY_POSITIVES",
            Error::EmptyNegatives => "EMPTY_NEGATIVES",
            Error::InvalidConfig(_) => "INVALID_CONFIG",
            Error::Checkpoint(_) => "BAD_CHECKPOINT",
            Error::Io { .. } => "IO",
            Error::AtPath { .. } => unreachable!("root strips path context"),
        }
    }

    pub(crate) fn at(self, path: impl Into<PathBuf>) -> Error {
        match self {
            e @ (Error::AtPath { .. } | Error::Io { .. }) => e,
            e => Error::AtPath {
                path: path.into(),
                source: Box::new(e),
            },
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Error {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
