//! Distances, noise sweeps, exit-point estimation, response sampling, and
//! the exact binary-output oracle.

mod exit_fit;
mod metrics;
mod oracle;
mod response;
mod simplex;
mod sweep;

pub use exit_fit::{
    analytic_distance, fit_exit_params, ExitFit, ExitOutcome, EXIT_FIT_THETA_MAX_DEG,
    EXIT_FIT_THETA_MIN_DEG, EXIT_FIT_VSTAR_POINTS, NO_EXIT_THRESHOLD,
};
pub use metrics::{euclidean_distance, total_variation};
pub use oracle::{
    brute_force_local_distance, nn_vs_oracle, ClassicalModel, OracleOptions, OracleOutcome,
    OracleReport,
};
pub use response::{response_grid, response_sample, ResponseSample};
pub use simplex::project_to_simplex;
pub use sweep::{cross_smooth, sweep, SweepOptions, SweepPoint, SweepResult};

use thiserror::Error;

use crate::qdist::QdistError;
use crate::trainer::TrainError;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("cardinality mismatch: {left} vs {right}")]
    CardinalityMismatch { left: usize, right: usize },
    #[error("brute-force search supports binary outputs only, got cardinality {found}")]
    UnsupportedCardinality { found: usize },
    #[error("hidden cardinality {found} outside 1..=6")]
    BadHiddenCardinality { found: usize },
    #[error("empty sweep grid")]
    EmptyGrid,
    #[error("grid is not strictly increasing at {at}")]
    GridNotIncreasing { at: f64 },
    #[error("grid value {value} outside family range [{lo}, {hi}]")]
    GridOutOfRange { value: f64, lo: f64, hi: f64 },
    #[error("exit fit needs at least {required} valid points, found {found}")]
    TooFewPoints { found: usize, required: usize },
    #[error("response grid resolution {found} must be at least 2")]
    BadResolution { found: usize },
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Qdist(#[from] QdistError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
