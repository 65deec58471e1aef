use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: malformed record: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: missing required field `{field}`")]
    Schema { line: usize, field: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("fit error: {0}")]
    Fit(String),

    #[error("training error: {0}")]
    Training(String),

    #[error("size error: {0}")]
    Size(String),

    #[error("empty corpus: {0}")]
    EmptyCorpus(String),

    #[error("toxicity service rejected request with HTTP {status}: {body}")]
    Client { status: u16, body: String },

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("transport error: {0}")]
    Transport(String),

    #[error("metric-order manifest mismatch: model has {expected:?}, input has {found:?}")]
    Manifest {
        expected: Vec<String>,
        found: Vec<String>,
    },

    #[error("failed to compute metric `{metric}`: {source}")]
    Panel {
        metric: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("undefined statistic: {0}")]
    Undefined(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the CLI: 2 for configuration/input problems,
    /// 3 for artifact incompatibility, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse { .. } | Error::Schema { .. } | Error::Io { .. } | Error::Config(_) => 2,
            Error::Manifest { .. } => 3,
            Error::Panel { source, .. } => source.exit_code(),
            _ => 1,
        }
    }
}
