use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Io(#[from] io::Error),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid dataset: {0}")]
    InvalidData(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("model file: {0}")]
    ModelFormat(String),

    #[error("unsupported model version `{found}` (expected `{expected}`)")]
    Version { found: String, expected: String },

    #[error("missing state assignments for layer {0}")]
    MissingAssignment(usize),

    #[error("degenerate posterior at graph `{graph}`, vertex {vertex}: normalizer is zero")]
    DegenerateVertex { graph: String, vertex: usize },

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("the stack has no layers")]
    EmptyStack,

    #[error("not enough samples: {0}")]
    TooFewSamples(String),

    #[error("config: {0}")]
    Config(String),
}

impl Error {
    /// Process exit code for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 1,
            Error::DegenerateVertex { .. } | Error::NonFinite(_) => 3,
            _ => 2,
        }
    }

    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}
