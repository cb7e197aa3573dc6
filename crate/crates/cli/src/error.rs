use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] tachyon_core::Error),

    #[error("config file {path}: line {line}: {message}")]
    ConfigFile { path: PathBuf, line: usize, message: String },

    #[error("invalid option: {0}")]
    Option(String),

    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot encode report: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    /// 2 validation, 3 numerical failure, 4 IO.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) => match e {
                tachyon_core::Error::Io(_) | tachyon_core::Error::Csv(_) | tachyon_core::Error::Format(_) => 4,
                e if e.is_validation() => 2,
                tachyon_core::Error::Parity(_) => 2,
                _ => 3,
            },
            CliError::ConfigFile { .. } | CliError::Option(_) => 2,
            CliError::Write { .. } | CliError::Read { .. } | CliError::Json(_) => 4,
        }
    }

    pub fn code(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.code(),
            CliError::ConfigFile { .. } => "config_file_error",
            CliError::Option(_) => "option_error",
            CliError::Write { .. } => "write_error",
            CliError::Read { .. } => "read_error",
            CliError::Json(_) => "json_error",
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
