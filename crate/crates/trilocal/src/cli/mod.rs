//! Command-line front end: argument/config parsing and job dispatch.

mod config;
mod run;

pub use config::{parse_args, parse_grid, CommandKind, RunConfig};
pub use run::{run, RunSummary};

use std::path::PathBuf;

use thiserror::Error;

use crate::analysis::AnalysisError;
use crate::qdist::QdistError;
use crate::trainer::TrainError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Usage(clap::Error),
    #[error("{message}")]
    Invalid { message: String },
    #[error("refusing to overwrite {path} (pass --force to allow)")]
    WouldOverwrite { path: PathBuf },
    #[error(transparent)]
    Qdist(#[from] QdistError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
