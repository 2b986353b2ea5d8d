use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("config: {0}")]
    Parse(String),

    #[error("config field `{field}`: {message}")]
    Field { field: String, message: String },

    #[error("{0}")]
    Numerical(#[from] blockpert::Error),

    #[error("{failed} required check(s) failed")]
    Requirement { failed: usize },

    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    /// 2 for anything wrong with the inputs, 3 for numerical failures and
    /// breached requirements, 1 for output problems.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Read { .. } | CliError::Parse(_) | CliError::Field { .. } => 2,
            CliError::Numerical(_) | CliError::Requirement { .. } => 3,
            CliError::Write { .. } | CliError::Csv(_) => 1,
        }
    }
}
