//! Versioned JSON checkpoints: a map from parameter path to shape plus the
//! flat float array, alongside the run config and vocabulary needed to
//! rebuild the state.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{RunConfig, TrainState};
use crate::data::Vocabulary;
use crate::error::{Error, Result};

pub const CHECKPOINT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
pub struct ParamEntry {
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format_version: u32,
    pub config: RunConfig,
    pub vocabulary: Vec<String>,
    pub params: BTreeMap<String, ParamEntry>,
}

pub fn save_checkpoint(
    state: &TrainState,
    cfg: &RunConfig,
    vocab: &Vocabulary,
    path: &Path,
) -> Result<()> {
    let mut params = BTreeMap::new();
    for (name, p) in state.parameters() {
        params.insert(
            name,
            ParamEntry {
                shape: p.shape().to_vec(),
                data: p.to_vec(),
            },
        );
    }
    let ckpt = Checkpoint {
        format_version: CHECKPOINT_FORMAT_VERSION,
        config: cfg.clone(),
        vocabulary: vocab.tokens().to_vec(),
        params,
    };
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent.display().to_string(), e))?;
    }
    let json = serde_json::to_string(&ckpt)?;
    std::fs::write(path, json).map_err(|e| Error::io(path.display().to_string(), e))
}

/// Rebuild a [`TrainState`] from a checkpoint file.
pub fn load_checkpoint(path: &Path) -> Result<(TrainState, RunConfig, Vocabulary)> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let ckpt: Checkpoint = serde_json::from_str(&text)?;
    if ckpt.format_version != CHECKPOINT_FORMAT_VERSION {
        return Err(Error::Config(format!(
            "checkpoint format {} unsupported (expected {})",
            ckpt.format_version, CHECKPOINT_FORMAT_VERSION
        )));
    }
    let vocab = Vocabulary::from_tokens(ckpt.vocabulary.clone())?;
    let state = TrainState::new(&ckpt.config, vocab.len())?;
    for (name, p) in state.parameters() {
        let entry = ckpt.params.get(&name).ok_or_else(|| {
            Error::Config(format!("checkpoint is missing parameter '{name}'"))
        })?;
        if entry.shape != p.shape() {
            return Err(Error::Config(format!(
                "checkpoint parameter '{name}' has shape {:?}, expected {:?}",
                entry.shape,
                p.shape()
            )));
        }
        p.set_data(entry.data.clone())?;
    }
    Ok((state, ckpt.config, vocab))
}
