use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("parse error in {path} at line {line}, column {column}: {message}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unknown key {key}")]
    UnknownKey { key: String },
    #[error("invalid value for {key}: {reason}")]
    InvalidValue { key: String, reason: String },
    #[error("{0}")]
    Usage(String),
    #[error("check failed: {0}")]
    CheckFailed(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] hsto_core::Error),
}

impl CliError {
    /// 1 for bad input or a failed check, 2 for runtime failures.
    pub fn exit_code(&self) -> i32 {
        use hsto_core::Error as E;
        match self {
            CliError::Parse { .. }
            | CliError::UnknownKey { .. }
            | CliError::InvalidValue { .. }
            | CliError::Usage(_)
            | CliError::CheckFailed(_) => 1,
            CliError::Io { .. } => 2,
            CliError::Core(e) => match e {
                E::InvalidSpec(_) | E::InvalidValue { .. } | E::UnsupportedKind(_) | E::EmptySet => 1,
                _ => 2,
            },
        }
    }

    pub fn io(path: impl AsRef<std::path::Path>) -> impl FnOnce(std::io::Error) -> CliError {
        let path = path.as_ref().display().to_string();
        move |source| CliError::Io { path, source }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
