//! The causal-structure-constrained network and its trainer.
//!
//! Three per-party perceptrons consume pairs of shared uniform latents and
//! emit outcome probabilities; a Monte Carlo batch average turns them into a
//! joint distribution, which is driven toward a target by relative-entropy
//! descent. Anything these networks express lies in the triangle's local set
//! by construction, so a successful fit is a locality certificate.
//!
//! A single training run is single-threaded over steps and deterministic per
//! seed; restarts run in parallel, each owning a derived seed. Batch kernels
//! parallelize over fixed-size row chunks with an ordered reduction, keeping
//! results identical for any worker count.

mod checkpoint;
mod loss;
mod model;
mod net;
mod train;

pub use checkpoint::{
    checkpoint_from_json, checkpoint_to_json, load_model, save_model, Checkpoint,
    CHECKPOINT_VERSION,
};
pub use loss::{kl_divergence, Loss};
pub use model::{model_distribution, LatentBatch, Party, TriangleModel};
pub use net::{Activation, NetGrads, PartyNet};
pub use train::{
    fit_model, model_gradients, train_step, CandidateKind, CandidateSummary, FitOutcome,
    GradWorkspace, TrainConfig, TriangleAdam, TriangleGrads, DEFAULT_EVAL_SEED,
};

use thiserror::Error;

use crate::qdist::QdistError;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("shape mismatch: {detail}")]
    ShapeMismatch { detail: String },
    #[error("bad training configuration: {detail}")]
    BadConfig { detail: String },
    #[error("target cardinality {target} != model cardinality {model}")]
    CardinalityMismatch { target: usize, model: usize },
    #[error("model probability is zero at flat index {index} where the target is positive")]
    ZeroModelProbability { index: usize },
    #[error("empty latent batch")]
    EmptyBatch,
    #[error("non-finite loss {loss} at step {step}")]
    NonFinite { step: usize, loss: f64 },
    #[error("non-finite gradient at step {step}")]
    NonFiniteGradient { step: usize },
    #[error("checkpoint version mismatch: expected {expected}, found {found}")]
    VersionMismatch { expected: u32, found: u32 },
    #[error("model distribution invalid: {0}")]
    InvalidModelDistribution(#[source] QdistError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
