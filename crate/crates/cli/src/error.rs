use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Unreadable or invalid input; exit code 2.
    #[error("{0}")]
    Input(String),
    /// Numeric failure inside an analysis; exit code 3.
    #[error("{0}")]
    Numeric(String),
    #[error("cannot write {path}: {source}")]
    Write {
        path: String,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) | CliError::Write { .. } => 2,
            CliError::Numeric(_) => 3,
        }
    }

    /// Attach a location to a library error, keeping its exit class.
    pub fn at(location: impl std::fmt::Display, err: rctverdict::Error) -> Self {
        let msg = format!("{location}: {err}");
        match err {
            rctverdict::Error::Numeric(_) => CliError::Numeric(msg),
            _ => CliError::Input(msg),
        }
    }
}
