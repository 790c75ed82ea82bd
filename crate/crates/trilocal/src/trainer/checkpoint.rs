//! Model checkpoint files.
//!
//! JSON with a version field, the outcome cardinality, per-party layer
//! sizes, the activation name, flat weight/bias arrays in layer order, and
//! the training configuration that produced the model. Weights round-trip
//! bit-exactly through the shortest-representation float encoding.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::model::{Party, TriangleModel};
use super::net::{Activation, PartyNet};
use super::train::TrainConfig;
use super::TrainError;

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
struct PartyData {
    layer_sizes: Vec<usize>,
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CheckpointData {
    version: u32,
    cardinality: usize,
    activation: String,
    parties: Vec<PartyData>,
    train_config: TrainConfig,
}

/// A model together with the configuration that trained it.
#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub model: TriangleModel,
    pub train_config: TrainConfig,
}

pub fn checkpoint_to_json(model: &TriangleModel, cfg: &TrainConfig) -> String {
    let parties = [Party::A, Party::B, Party::C]
        .iter()
        .map(|&p| {
            let net = model.net(p);
            PartyData {
                layer_sizes: net.layer_sizes().to_vec(),
                weights: net.weights().to_vec(),
                biases: net.biases().to_vec(),
            }
        })
        .collect();
    let data = CheckpointData {
        version: CHECKPOINT_VERSION,
        cardinality: model.cardinality(),
        activation: model.net(Party::A).activation().name().to_string(),
        parties,
        train_config: cfg.clone(),
    };
    serde_json::to_string_pretty(&data).expect("checkpoint serializes")
}

pub fn checkpoint_from_json(text: &str) -> Result<Checkpoint, TrainError> {
    let data: CheckpointData = serde_json::from_str(text)?;
    if data.version != CHECKPOINT_VERSION {
        return Err(TrainError::VersionMismatch {
            expected: CHECKPOINT_VERSION,
            found: data.version,
        });
    }
    if data.parties.len() != 3 {
        return Err(TrainError::ShapeMismatch {
            detail: format!("checkpoint has {} parties, expected 3", data.parties.len()),
        });
    }
    let activation = Activation::from_name(&data.activation).ok_or_else(|| {
        TrainError::ShapeMismatch { detail: format!("unknown activation `{}`", data.activation) }
    })?;
    let mut nets = Vec::with_capacity(3);
    for p in &data.parties {
        if p.layer_sizes.last() != Some(&data.cardinality) {
            return Err(TrainError::ShapeMismatch {
                detail: format!(
                    "party output size {:?} disagrees with cardinality {}",
                    p.layer_sizes.last(),
                    data.cardinality
                ),
            });
        }
        nets.push(PartyNet::from_parts(
            p.layer_sizes.clone(),
            p.weights.clone(),
            p.biases.clone(),
            activation,
        )?);
    }
    let net_c = nets.pop().unwrap();
    let net_b = nets.pop().unwrap();
    let net_a = nets.pop().unwrap();
    Ok(Checkpoint {
        model: TriangleModel::new(net_a, net_b, net_c)?,
        train_config: data.train_config,
    })
}

/// Writes a checkpoint next to its training configuration.
pub fn save_model(model: &TriangleModel, cfg: &TrainConfig, path: &Path) -> Result<(), TrainError> {
    std::fs::write(path, checkpoint_to_json(model, cfg))?;
    Ok(())
}

/// Reads a checkpoint; malformed files report the parse position, version
/// or shape problems name what disagreed.
pub fn load_model(path: &Path) -> Result<Checkpoint, TrainError> {
    let text = std::fs::read_to_string(path)?;
    checkpoint_from_json(&text)
}
