use std::path::PathBuf;

use thiserror::Error;

/// Failures of a run, each mapped to a process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{key}: {message}")]
    Config { key: String, message: String },

    #[error("numerical failure: {0}")]
    Numerical(svar_signs::Error),

    #[error("no draw satisfied the restrictions: {reduced_form} reduced-form draws and {rotations} rotations tried, 0 accepted")]
    NoAcceptedDraws { reduced_form: usize, rotations: usize },

    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn config(key: &str, message: impl Into<String>) -> Self {
        CliError::Config { key: key.to_string(), message: message.into() }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => 1,
            CliError::Numerical(_) | CliError::Write { .. } => 2,
            CliError::NoAcceptedDraws { .. } => 3,
        }
    }
}

impl From<svar_signs::Error> for CliError {
    fn from(e: svar_signs::Error) -> Self {
        match e {
            svar_signs::Error::NoAcceptedDraws { reduced_form, rotations } => {
                CliError::NoAcceptedDraws { reduced_form, rotations }
            }
            other => CliError::Numerical(other),
        }
    }
}
