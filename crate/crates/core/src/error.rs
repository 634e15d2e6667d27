use std::io;

use thiserror::Error;

/// Errors raised by the parser library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },

    #[error("invalid tree: {0}")]
    Tree(#[from] TreeError),

    #[error("{op}: dimension mismatch (expected {expected}, found {found})")]
    Dimension {
        op: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("malformed {kind} file: {message}")]
    Container { kind: &'static str, message: String },

    #[error("unknown sentence key {0:?} in contextual store")]
    MissingKey(String),

    #[error("checksum mismatch for sentence key {key:?}: treebank and vectors are misaligned")]
    Checksum { key: String },

    #[error("illegal transition {0}")]
    IllegalTransition(String),

    #[error("terminal configuration has no legal transitions")]
    Terminal,

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("invalid argument: {0}")]
    Invalid(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Well-formedness violations of a dependency tree. Token ids are 1-based.
#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum TreeError {
    #[error("no token is attached to the root")]
    NoRoot,

    #[error("multiple root-attached tokens: {0:?}")]
    MultipleRoots(Vec<usize>),

    #[error("cycle through tokens {0:?}")]
    Cycle(Vec<usize>),

    #[error("token {token} has head {head} outside 0..={len}")]
    HeadOutOfRange { token: usize, head: usize, len: usize },

    #[error("token {0} is its own head")]
    SelfLoop(usize),

    #[error("heads and labels differ in length ({heads} vs {labels})")]
    LengthMismatch { heads: usize, labels: usize },

    #[error("empty tree")]
    Empty,
}

pub type Result<T> = std::result::Result<T, Error>;
