//! Command-line front end for liegeo-core: configuration, dispatch,
//! CSV/JSON/SVG output and the verification suite.

use std::path::{Path, PathBuf};

pub mod cli;
pub mod commands;
pub mod config;
pub mod output;
pub mod verify;

pub use config::RunConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("criterion inapplicable: {0}")]
    Inapplicable(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) | CliError::Io { .. } => 3,
            CliError::Inapplicable(_) => 4,
        }
    }
}

impl From<liegeo_core::Error> for CliError {
    fn from(e: liegeo_core::Error) -> Self {
        use liegeo_core::Error as E;
        match e {
            E::InvalidDimension(_)
            | E::BasisMismatch { .. }
            | E::InvalidMetric(_)
            | E::InvalidArgument(_) => CliError::Config(e.to_string()),
            E::Unsupported(_) | E::Precondition { .. } | E::Inapplicable { .. } => {
                CliError::Inapplicable(e.to_string())
            }
            E::IntegrationDiverged { .. } | E::OutOfRange { .. } | E::Endpoint(_) => {
                CliError::Numeric(e.to_string())
            }
        }
    }
}
