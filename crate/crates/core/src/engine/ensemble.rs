use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{EngineConfig, EngineError};
use crate::classifiers::{FeatureSelector, TrainedModel};
use crate::panel::{Day, Normalizer};

pub const ENSEMBLE_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoinModel {
    pub selector: FeatureSelector,
    pub model: TrainedModel,
}

/// Per-coin models with the preprocessing frozen from their training window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedEnsemble {
    pub format_version: u32,
    pub config_hash: String,
    pub config: EngineConfig,
    pub coins: Vec<String>,
    pub panel_width: usize,
    pub normalizer: Normalizer,
    pub members: Vec<CoinModel>,
    pub train_days: Vec<Day>,
    /// Final training probabilities, `[day][coin]`.
    pub train_probs: Vec<Vec<f64>>,
    pub iterations: usize,
    /// Largest per-day change after each training sweep.
    pub deltas: Vec<f64>,
}

impl TrainedEnsemble {
    pub fn save<W: Write>(&self, sink: W) -> Result<(), EngineError> {
        serde_json::to_writer(sink, self)?;
        Ok(())
    }

    /// Loads and checks the format version and embedded config hash.
    pub fn load<R: Read>(source: R) -> Result<Self, EngineError> {
        let ens: TrainedEnsemble = serde_json::from_reader(source)?;
        if ens.format_version != ENSEMBLE_FORMAT_VERSION {
            return Err(EngineError::Version(ens.format_version));
        }
        if ens.config.hash() != ens.config_hash {
            return Err(EngineError::Config("embedded config hash does not match config".into()));
        }
        Ok(ens)
    }
}
