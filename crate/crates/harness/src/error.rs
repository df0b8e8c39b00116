use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("config: {0}")]
    Config(String),
    #[error("upstream artifact: {0}")]
    Upstream(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {msg}")]
    Format { path: PathBuf, msg: String },
    #[error("{0}")]
    Run(String),
}

impl Error {
    /// Process exit code for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Upstream(_) => 3,
            _ => 1,
        }
    }

    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Error {
        let path = path.into();
        move |source| Error::Io { path, source }
    }

    pub fn format(path: impl Into<PathBuf>, msg: impl std::fmt::Display) -> Error {
        Error::Format { path: path.into(), msg: msg.to_string() }
    }

    pub fn run(e: impl std::fmt::Display) -> Error {
        Error::Run(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
