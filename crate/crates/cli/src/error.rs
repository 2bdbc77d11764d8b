use thiserror::Error;

/// Failures mapped onto the process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Unreadable or invalid input. Exit code 2, nothing is written.
    #[error("input error: {0}")]
    Input(String),
    /// A computation failed or produced unusable numbers. Exit code 1.
    #[error("numeric error: {0}")]
    Numeric(String),
    /// Outputs were written but a reproduction check failed. Exit code 1.
    #[error("{0} check(s) failed")]
    ChecksFailed(usize),
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Numeric(_) | CliError::ChecksFailed(_) | CliError::Io { .. } => 1,
        }
    }
}

pub fn input<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Input(e.to_string())
}

pub fn numeric<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Numeric(e.to_string())
}
