use std::path::PathBuf;

/// Failure of a command, carrying its exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad configuration, arguments or input files.
    #[error("{0}")]
    Usage(String),
    #[error("training aborted: {0}")]
    Train(#[source] ralm_core::Error),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Train(_) => 3,
            _ => 2,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }
}

pub(crate) fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Core errors raised while checking inputs, before any training.
pub(crate) fn invalid(e: ralm_core::Error) -> CliError {
    CliError::Usage(e.to_string())
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
