use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Missing or invalid configuration; `path` is the dotted field path.
    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },
    #[error("unknown experiment kind `{0}` (known: {known})", known = crate::config::Kind::NAMES.join(", "))]
    UnknownKind(String),
    #[error(transparent)]
    Sim(#[from] regensim::Error),
    #[error("io error on {path}: {message}")]
    Io { path: String, message: String },
}

impl CliError {
    pub fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Config { path: path.into(), message: message.into() }
    }

    pub fn io(path: &std::path::Path, e: impl std::fmt::Display) -> Self {
        CliError::Io { path: path.display().to_string(), message: e.to_string() }
    }

    /// 2 for configuration problems, 1 for everything that fails at run time.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } | CliError::UnknownKind(_) => 2,
            CliError::Sim(_) | CliError::Io { .. } => 1,
        }
    }
}
