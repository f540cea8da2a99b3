//! Experiment driver for the `primerace` library: declarative configs in,
//! CSV/JSON reports and a manifest out.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod run;

use std::path::PathBuf;

use thiserror::Error;

pub use config::{Checkpoints, ExperimentConfig, Outputs, SigmaGrid, Task};
pub use run::{execute, run_experiment, workers_from_env, Report, RunOptions, RunOutcome, WORKERS_ENV};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid {field}: {message}")]
    Validation { field: String, message: String },
    #[error("{0}")]
    Domain(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation { .. } => 2,
            CliError::Domain(_) => 3,
            CliError::Io { .. } => 4,
        }
    }

    /// Structured form written to stderr on failure.
    pub fn to_json(&self) -> serde_json::Value {
        match self {
            CliError::Validation { field, message } => {
                serde_json::json!({ "error": "validation", "field": field, "message": message })
            }
            CliError::Domain(m) => serde_json::json!({ "error": "domain", "message": m }),
            CliError::Io { path, source } => {
                serde_json::json!({ "error": "io", "path": path.display().to_string(), "message": source.to_string() })
            }
        }
    }
}

macro_rules! domain_from {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Domain(e.to_string())
            }
        }
    )*};
}

domain_from!(
    primerace::races::RaceError,
    primerace::lfun::LfunError,
    primerace::characters::CharacterError,
    primerace::sieve::SieveError
);
