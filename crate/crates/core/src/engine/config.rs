use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::EngineError;
use crate::classifiers::{ModelKind, ModelSpec, SelectorSpec};
use crate::similarity::SimilarityKind;

/// How iteration-zero probabilities are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbabilityInit {
    /// Independent `U(0, 1)` per coin and day.
    #[default]
    Uniform,
    /// One `U(0, 1)` draw per day shared by every coin.
    SharedUniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    /// Days of history per lagged vector.
    pub lag: usize,
    /// Convergence threshold on the L2 change of a probability vector.
    pub epsilon: f64,
    pub max_iter: usize,
    pub kinds: Vec<SimilarityKind>,
    pub seed: u64,
    pub selector: SelectorSpec,
    pub model: ModelSpec,
    /// When false the similarity block is dropped from every input row.
    pub use_similarity: bool,
    /// Refit the feature selector in every training sweep (otherwise only in the first).
    pub refit_selector_each_iter: bool,
    pub init: ProbabilityInit,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            lag: 1,
            epsilon: 1e-3,
            max_iter: 10,
            kinds: SimilarityKind::ALL.to_vec(),
            seed: 0,
            selector: SelectorSpec::None,
            model: ModelSpec::new(ModelKind::lr()),
            use_similarity: true,
            refit_selector_each_iter: true,
            init: ProbabilityInit::Uniform,
        }
    }
}

impl EngineConfig {
    pub fn validate(&self) -> Result<(), EngineError> {
        if self.lag == 0 {
            return Err(EngineError::Config("lag must be at least 1".into()));
        }
        if !(self.epsilon > 0.0) {
            return Err(EngineError::Config(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if self.max_iter == 0 {
            return Err(EngineError::Config("max_iter must be at least 1".into()));
        }
        self.model.kind.validate()?;
        Ok(())
    }

    /// Similarity kinds actually used.
    pub fn active_kinds(&self) -> &[SimilarityKind] {
        if self.use_similarity {
            &self.kinds
        } else {
            &[]
        }
    }

    /// Hex SHA-256 of the canonical JSON encoding.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("engine config serializes");
        hex_digest(&json)
    }
}

pub(crate) fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}
