//! Collective up/down price prediction for a basket of assets.
//!
//! Each asset gets its own classifier whose inputs combine the asset's time-lagged
//! features, its similarity to every other asset, and the current up-probabilities of
//! the other assets. Probabilities are refined jointly until they stop moving.
//!
//! Modules, bottom up: [`panel`] (ingest, labels, aligned features), [`similarity`],
//! [`classifiers`] (base learners and feature selection), [`engine`] (collective
//! training and inference), and [`eval`] (rolling backtest, metrics, synthetic data).

// Negated float comparisons also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classifiers;
pub mod engine;
pub mod eval;
pub mod panel;
pub mod par;
pub mod seed;
pub mod similarity;

pub use classifiers::{ModelKind, ModelSpec, SelectorSpec};

pub use panel::{FeaturePanel, Group, LabelPanel, OhlcSeries, Task};
pub use engine::{c2p2_fit, c2p2_predict, EngineConfig, TrainedEnsemble};
pub use similarity::SimilarityKind;
