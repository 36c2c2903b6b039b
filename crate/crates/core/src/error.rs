// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("index exists at {0}")]
    IndexExists(PathBuf),
    #[error("index is locked by another build: {0}")]
    IndexLocked(PathBuf),
    #[error("corrupt index: {0}")]
    CorruptIndex(String),
    #[error("unsupported index format version {0}")]
    UnsupportedVersion(u32),
    #[error("no such table: {0}")]
    NoSuchTable(u32),
    #[error("empty query column")]
    EmptyQueryColumn,
    #[error("empty query relation")]
    EmptyQueryRelation,
    #[error("non-numeric target")]
    NonNumericTarget,
    #[error("{kind} seeker expects {expected} query column(s), got {got}")]
    Arity {
        kind: &'static str,
        expected: &'static str,
        got: usize,
    },
    #[error("query columns have unequal lengths")]
    RaggedQuery,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("combiner {kind} takes {expected} input(s), got {got}")]
    CombinerArity {
        kind: &'static str,
        expected: &'static str,
        got: usize,
    },
    #[error("node `{node}`: {source}")]
    Node {
        node: String,
        #[source]
        source: Box<Error>,
    },
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn at_node(self, node: &str) -> Self {
        Error::Node {
            node: node.to_string(),
            source: Box::new(self),
        }
    }
}

/// Plan construction, parsing and validation failures.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PlanError {
    #[error("duplicate name `{0}`")]
    DuplicateName(String),
    #[error("unknown upstream `{upstream}` referenced by `{node}`")]
    UnknownUpstream { node: String, upstream: String },
    #[error("cycle through `{0}`")]
    Cycle(String),
    #[error("node `{node}`: {message}")]
    Arity { node: String, message: String },
    #[error("plan has {0} terminal nodes, expected exactly one")]
    TerminalCount(usize),
    #[error("plan has no input node")]
    NoInput,
    #[error("node `{0}` does not reach the terminal")]
    Unreachable(String),
    #[error("node `{node}`: unknown query column `{column}`")]
    UnknownColumn { node: String, column: String },
    #[error("node `{node}`: {message}")]
    Invalid { node: String, message: String },
    #[error("plan parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("bad column reference `{reference}`: {message}")]
    ColumnRef { reference: String, message: String },
}
