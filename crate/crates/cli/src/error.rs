use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// The command line is well formed but asks for something unsupported.
    #[error("{0}")]
    Usage(String),

    /// A computed value overflowed or became NaN.
    #[error("non-finite result: {0}")]
    Numerical(String),

    #[error(transparent)]
    Core(#[from] handcloud::Error),

    #[error("{path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError::Usage(message.into())
    }

    /// 1 usage, 2 data, 3 numerical failure.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Numerical(_) => 3,
            CliError::Core(e) if e.is_numerical() => 3,
            CliError::Core(handcloud::Error::NonFiniteCost { .. }) => 3,
            CliError::Core(_) | CliError::Write { .. } => 2,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
