//! Standard-library companion to `marl-lob-core`: TOML run configuration,
//! CSV artifacts, run manifests and the `marl-lob` command line.
//!
//! Exit status contract of the binary: 0 success, 1 runtime failure,
//! 2 usage or configuration error.

pub mod analyze;
pub mod artifacts;
pub mod compare;
pub mod config;
pub mod manifest;
pub mod run;

use std::fmt;

pub use analyze::{cmd_analyze, Which};
pub use compare::cmd_compare;
pub use config::{ConfigError, RunConfig};
pub use manifest::RunManifest;
pub use run::{cmd_run, RunRequest};

#[derive(Debug)]
pub enum CliError {
    Usage(ConfigError),
    Runtime(anyhow::Error),
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError::Usage(ConfigError {
            path: None,
            line: None,
            column: None,
            message: message.into(),
        })
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(e) => write!(f, "{e}"),
            CliError::Runtime(e) => write!(f, "{e:#}"),
        }
    }
}

impl std::error::Error for CliError {}
