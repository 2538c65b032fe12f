use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Input rejected before any computation started.
    #[error("invalid input:\n  {}", .0.join("\n  "))]
    Invalid(Vec<String>),

    #[error("{path}: line {line}, column {column}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("{0}")]
    Schema(String),

    #[error(transparent)]
    Core(#[from] fairgame_core::Error),

    #[error("{0}")]
    Runtime(String),
}

impl Error {
    pub fn invalid(message: impl Into<String>) -> Self {
        Error::Invalid(vec![message.into()])
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(path: impl Into<PathBuf>, err: &serde_json::Error) -> Self {
        Error::Parse {
            path: path.into(),
            line: err.line(),
            column: err.column(),
            message: err.to_string(),
        }
    }

    /// Process exit status: 2 for rejected input, 1 for failures while
    /// running.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Invalid(_) | Error::Parse { .. } | Error::Schema(_) => 2,
            Error::Io { .. } | Error::Csv { .. } | Error::Core(_) | Error::Runtime(_) => 1,
        }
    }

    /// Reclassifies a core error raised while checking user input.
    pub fn rejected(err: fairgame_core::Error) -> Self {
        Error::Invalid(vec![err.to_string()])
    }
}
