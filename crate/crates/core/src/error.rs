use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("unknown label `{0}`")]
    UnknownLabel(String),

    #[error("invalid IOB2 sequence at position {position}: {message}")]
    InvalidIob2 { position: usize, message: String },

    #[error("sentence {sentence}: {message}")]
    Alignment { sentence: usize, message: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("duplicate entity type `{0}`")]
    DuplicateType(String),

    #[error("no features left after applying the count cutoff")]
    EmptyFeatureSet,

    #[error("weight vector has length {found}, expected {expected}")]
    WeightLength { expected: usize, found: usize },

    #[error("every path is blocked at position {position}")]
    Contradictory { position: usize },

    #[error("lattice has no finite path")]
    NoFinitePath,

    #[error("sentence {sentence}, position {position}: label `{label}` is outside the state set")]
    GoldState {
        sentence: usize,
        position: usize,
        label: String,
    },

    #[error("non-finite {what} at parameter slot {slot}")]
    NonFinite { what: &'static str, slot: usize },

    #[error("model file line {line}: {message}")]
    ModelFormat { line: usize, message: String },

    #[error("model format version {found} is not supported (expected {expected})")]
    VersionMismatch { found: String, expected: u32 },

    #[error("experiment cell `{cell}` failed: {source}")]
    Experiment {
        cell: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] io::Error),
}
