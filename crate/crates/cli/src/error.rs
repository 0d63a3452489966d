use std::io;
use std::path::{Path, PathBuf};

use qcausal::Error;
use thiserror::Error;

pub const EXIT_USAGE: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] Error),

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },

    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),

    #[error("{0}")]
    Usage(String),

    #[error("{0}")]
    Numerical(String),

    #[error("fit did not converge; the report was still written")]
    NotConverged,
}

impl CliError {
    pub fn io(path: &Path, source: io::Error) -> Self {
        CliError::Io { path: path.to_path_buf(), source }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) => match e {
                Error::NotHermitian(_)
                | Error::NotPsd(_)
                | Error::InvalidTrace(_)
                | Error::NotTracePreserving(_)
                | Error::UndefinedConditioning(_)
                | Error::InvariantViolation(_)
                | Error::NotUnitVector(_)
                | Error::NotBipartite(_)
                | Error::ParameterCount { .. } => EXIT_NUMERICAL,
                _ => EXIT_USAGE,
            },
            CliError::Io { .. } | CliError::Json(_) | CliError::Usage(_) => EXIT_USAGE,
            CliError::Numerical(_) | CliError::NotConverged => EXIT_NUMERICAL,
        }
    }
}
