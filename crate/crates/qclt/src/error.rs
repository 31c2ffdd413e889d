use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] qclt_core::Error),
    #[error("config: {0}")]
    Config(String),
    #[error("format: {0}")]
    Format(String),
    #[error("check failed: {0}")]
    Check(String),
    #[error("io: {0}")]
    Io(#[from] io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    /// Process exit status: 2 parameter or config, 3 infeasible ensemble,
    /// 4 enumeration cap, 5 numeric or failed check, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        use qclt_core::Error as E;
        match self {
            CliError::Core(E::Parameter { .. } | E::DimensionMismatch { .. }) => 2,
            CliError::Core(E::Infeasible(_)) => 3,
            CliError::Core(E::CapExceeded { .. }) => 4,
            CliError::Core(E::Numeric(_)) => 5,
            CliError::Config(_) | CliError::Format(_) => 2,
            CliError::Check(_) => 5,
            CliError::Io(_) | CliError::Json(_) | CliError::Csv(_) => 1,
        }
    }
}

pub(crate) fn config(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

pub(crate) fn format(msg: impl Into<String>) -> CliError {
    CliError::Format(msg.into())
}
