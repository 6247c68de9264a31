//! Fixtures, numerical experiments and the `straitlab` command line.
//!
//! Every experiment takes a resolved [`ExperimentConfig`] and returns a
//! report; [`output`] turns reports into CSV and JSON artifacts whose bytes
//! depend only on the config.

pub mod capture;
pub mod cli;
pub mod config;
pub mod fixtures;
pub mod implosion;
pub mod landing;
pub mod mismatch;
pub mod output;

pub use config::ExperimentConfig;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    /// Bad flags or arguments; exit status 2.
    #[error("{0}")]
    Usage(String),
    /// The computation itself failed; exit status 1.
    #[error("{0}")]
    Domain(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Usage(_) => 2,
            _ => 1,
        }
    }

    pub(crate) fn domain(e: impl std::fmt::Display) -> Self {
        HarnessError::Domain(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;

pub const VERSION: &str = concat!("straitlab ", env!("CARGO_PKG_VERSION"));
