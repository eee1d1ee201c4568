//! Collective training and inference.
//!
//! For each coin `c` and day `d` the model input is the coin's lagged features, its
//! similarities to every other coin, and every other coin's current up-probability.
//! Probabilities are refined in Jacobi sweeps: each sweep reads a snapshot taken at its
//! start, so the order in which coins are processed never matters.

mod config;
mod ensemble;
mod features;
mod inference;
mod training;

use thiserror::Error;

use crate::classifiers::ClassifierError;
use crate::panel::PanelError;
use crate::similarity::SimilarityError;

pub use config::{EngineConfig, ProbabilityInit};
pub use ensemble::{CoinModel, TrainedEnsemble, ENSEMBLE_FORMAT_VERSION};
pub use features::{build_lagged, design_width, FeatureContext};
pub use inference::{c2p2_predict, c2p2_predict_with, Prediction, PredictOptions};
pub use training::{c2p2_fit, c2p2_fit_with, FitOptions};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("day index {day} has fewer than {lag} days of history")]
    InsufficientHistory { day: usize, lag: usize },
    #[error("training range is empty")]
    EmptyTrainRange,
    #[error("coin `{0}` has no labeled training days")]
    NoLabels(String),
    #[error("width mismatch: expected {expected}, found {found}")]
    WidthMismatch { expected: usize, found: usize },
    #[error("coin or day axes differ between inputs: {0}")]
    AxisMismatch(String),
    #[error("invalid engine configuration: {0}")]
    Config(String),
    #[error("unsupported ensemble format version {0}")]
    Version(u32),
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
    #[error(transparent)]
    Similarity(#[from] SimilarityError),
    #[error(transparent)]
    Panel(#[from] PanelError),
    #[error("serialization: {0}")]
    Serde(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

// Seed path tags.
pub(crate) const TAG_TRAIN_INIT: u64 = 1;
pub(crate) const TAG_PREDICT_INIT: u64 = 2;
pub(crate) const TAG_MODEL: u64 = 3;
