use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}:{line}: {msg}")]
    Parse { path: String, line: usize, msg: String },
    #[error(transparent)]
    Solver(#[from] mfmomp::Error),
    #[error("manifest: {0}")]
    Manifest(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    /// Process exit code: 3 for anything the caller can fix by changing the
    /// input, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Solver(mfmomp::Error::Numerical(_)) | CliError::Csv(_) => 1,
            _ => 3,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
