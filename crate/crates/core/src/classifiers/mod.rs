//! Base learners used as per-coin models, plus PCA and ANOVA-F feature selection.
//!
//! Every learner produces an up-probability in `[0, 1]`. Training sets with a single
//! class produce a constant model at `1 - 1e-3` (all up) or `1e-3` (all down).

mod anova;
mod bayes;
mod forest;
mod knn;
mod logistic;
mod pca;
mod selector;
mod svm;

use ndarray::{Array1, Array2, ArrayView2};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use anova::{anova_f_scores, select_top_k, F_SENTINEL};
pub use bayes::GaussianNb;
pub use forest::{DecisionTree, RandomForest};
pub use knn::Knn;
pub use logistic::{logistic_objective, LogisticModel, LogisticTrace};
pub use pca::{pca_fit, Pca};
pub use selector::{fit_selector, FeatureSelector, SelectorSpec};
pub use svm::LinearSvm;

/// Probability assigned to the absent class when training labels are all one class.
pub const SINGLE_CLASS_DELTA: f64 = 1e-3;

#[derive(Debug, Error, PartialEq)]
pub enum ClassifierError {
    #[error("bad hyperparameters: {0}")]
    BadHyperparameters(String),
    #[error("expected {expected} columns, found {found}")]
    DimMismatch { expected: usize, found: usize },
    #[error("both classes are required")]
    SingleClass,
    #[error("k = {k} must lie in 1..={max}")]
    BadK { k: usize, max: usize },
    #[error("invalid dataset: {0}")]
    BadData(String),
}

/// Design matrix with binary labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x: Array2<f64>,
    pub y: Vec<u8>,
}

impl Dataset {
    pub fn new(x: Array2<f64>, y: Vec<u8>) -> Result<Self, ClassifierError> {
        if x.nrows() == 0 {
            return Err(ClassifierError::BadData("no rows".into()));
        }
        if x.nrows() != y.len() {
            return Err(ClassifierError::BadData(format!("{} rows but {} labels", x.nrows(), y.len())));
        }
        if y.iter().any(|&v| v > 1) {
            return Err(ClassifierError::BadData("labels must be 0 or 1".into()));
        }
        Ok(Self { x, y })
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn m(&self) -> usize {
        self.x.ncols()
    }

    pub fn positives(&self) -> usize {
        self.y.iter().filter(|&&v| v == 1).count()
    }

    /// `Some(label)` when every example carries the same label.
    pub fn single_class(&self) -> Option<u8> {
        let p = self.positives();
        if p == 0 {
            Some(0)
        } else if p == self.n() {
            Some(1)
        } else {
            None
        }
    }
}

fn default_l2() -> f64 {
    1.0
}
fn default_lr_tol() -> f64 {
    1e-8
}
fn default_lr_iter() -> usize {
    500
}
fn default_trees() -> usize {
    100
}
fn default_true() -> bool {
    true
}
fn default_knn_k() -> usize {
    5
}
fn default_svm_tol() -> f64 {
    1e-6
}
fn default_svm_epochs() -> usize {
    2000
}
fn default_var_floor() -> f64 {
    1e-9
}

/// Learner family and its hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelKind {
    /// L2-regularized logistic regression fitted by Newton's method.
    Lr {
        #[serde(default = "default_l2")]
        l2: f64,
        #[serde(default = "default_lr_tol")]
        tol: f64,
        #[serde(default = "default_lr_iter")]
        max_iter: usize,
    },
    /// Bagged CART trees with Gini impurity.
    Rf {
        #[serde(default = "default_trees")]
        trees: usize,
        /// Features tried per split; `None` means `ceil(sqrt(m))`.
        #[serde(default)]
        max_features: Option<usize>,
        #[serde(default)]
        max_depth: Option<usize>,
        #[serde(default = "default_true")]
        bootstrap: bool,
    },
    Knn {
        #[serde(default = "default_knn_k")]
        k: usize,
    },
    /// Hinge-loss linear SVM with a logistic link on the decision margin.
    Lsvm {
        #[serde(default = "default_l2")]
        l2: f64,
        #[serde(default = "default_svm_tol")]
        tol: f64,
        #[serde(default = "default_svm_epochs")]
        max_epochs: usize,
    },
    Gnb {
        #[serde(default = "default_var_floor")]
        var_floor: f64,
    },
}

impl ModelKind {
    pub fn lr() -> Self {
        ModelKind::Lr {
            l2: default_l2(),
            tol: default_lr_tol(),
            max_iter: default_lr_iter(),
        }
    }

    pub fn rf() -> Self {
        ModelKind::Rf {
            trees: default_trees(),
            max_features: None,
            max_depth: None,
            bootstrap: true,
        }
    }

    pub fn knn() -> Self {
        ModelKind::Knn { k: default_knn_k() }
    }

    pub fn lsvm() -> Self {
        ModelKind::Lsvm {
            l2: default_l2(),
            tol: default_svm_tol(),
            max_epochs: default_svm_epochs(),
        }
    }

    pub fn gnb() -> Self {
        ModelKind::Gnb {
            var_floor: default_var_floor(),
        }
    }

    /// Short display name, as used in report tables.
    pub fn label(&self) -> &'static str {
        match self {
            ModelKind::Lr { .. } => "LR",
            ModelKind::Rf { .. } => "RF",
            ModelKind::Knn { .. } => "KNN",
            ModelKind::Lsvm { .. } => "L-SVM",
            ModelKind::Gnb { .. } => "NB",
        }
    }

    pub fn validate(&self) -> Result<(), ClassifierError> {
        let bad = |m: String| Err(ClassifierError::BadHyperparameters(m));
        match *self {
            ModelKind::Lr { l2, tol, max_iter } | ModelKind::Lsvm { l2, tol, max_epochs: max_iter } => {
                if !(l2 > 0.0 && l2.is_finite()) {
                    return bad(format!("regularization must be positive, got {l2}"));
                }
                if !(tol > 0.0) || max_iter == 0 {
                    return bad("tolerance and iteration cap must be positive".into());
                }
            }
            ModelKind::Rf {
                trees, max_features, max_depth, ..
            } => {
                if trees == 0 {
                    return bad("random forest needs at least one tree".into());
                }
                if max_features == Some(0) || max_depth == Some(0) {
                    return bad("max_features and max_depth must be positive when set".into());
                }
            }
            ModelKind::Knn { k } => {
                if k == 0 {
                    return bad("k must be at least 1".into());
                }
            }
            ModelKind::Gnb { var_floor } => {
                if !(var_floor > 0.0) {
                    return bad("variance floor must be positive".into());
                }
            }
        }
        Ok(())
    }
}

/// A learner plus the seed for any randomness it uses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    #[serde(flatten)]
    pub kind: ModelKind,
    #[serde(default)]
    pub seed: u64,
}

impl ModelSpec {
    pub fn new(kind: ModelKind) -> Self {
        Self { kind, seed: 0 }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            kind: self.kind.clone(),
            seed,
        }
    }
}

/// Fitted model state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TrainedModel {
    Constant { m: usize, p: f64 },
    Lr(LogisticModel),
    Rf(RandomForest),
    Knn(Knn),
    Lsvm(LinearSvm),
    Gnb(GaussianNb),
}

/// Fits `spec` to `data`.
pub fn fit(spec: &ModelSpec, data: &Dataset) -> Result<TrainedModel, ClassifierError> {
    spec.kind.validate()?;
    if let Some(label) = data.single_class() {
        let p = if label == 1 { 1.0 - SINGLE_CLASS_DELTA } else { SINGLE_CLASS_DELTA };
        return Ok(TrainedModel::Constant { m: data.m(), p });
    }
    Ok(match spec.kind {
        ModelKind::Lr { l2, tol, max_iter } => TrainedModel::Lr(LogisticModel::fit(data, l2, tol, max_iter)?.0),
        ModelKind::Rf {
            trees,
            max_features,
            max_depth,
            bootstrap,
        } => TrainedModel::Rf(RandomForest::fit(data, trees, max_features, max_depth, bootstrap, spec.seed)),
        ModelKind::Knn { k } => TrainedModel::Knn(Knn::fit(data, k)),
        ModelKind::Lsvm { l2, tol, max_epochs } => {
            TrainedModel::Lsvm(LinearSvm::fit(data, l2, tol, max_epochs, spec.seed))
        }
        ModelKind::Gnb { var_floor } => TrainedModel::Gnb(GaussianNb::fit(data, var_floor)),
    })
}

impl TrainedModel {
    /// Number of input columns the model was fitted on.
    pub fn input_width(&self) -> usize {
        match self {
            TrainedModel::Constant { m, .. } => *m,
            TrainedModel::Lr(model) => model.weights.len(),
            TrainedModel::Rf(model) => model.input_width,
            TrainedModel::Knn(model) => model.x.ncols(),
            TrainedModel::Lsvm(model) => model.weights.len(),
            TrainedModel::Gnb(model) => model.mean[0].len(),
        }
    }

    /// Up-probability per row of `x`.
    pub fn predict_proba(&self, x: ArrayView2<'_, f64>) -> Result<Array1<f64>, ClassifierError> {
        if x.ncols() != self.input_width() {
            return Err(ClassifierError::DimMismatch {
                expected: self.input_width(),
                found: x.ncols(),
            });
        }
        let p = match self {
            TrainedModel::Constant { p, .. } => Array1::from_elem(x.nrows(), *p),
            TrainedModel::Lr(model) => model.predict_proba(x),
            TrainedModel::Rf(model) => model.predict_proba(x),
            TrainedModel::Knn(model) => model.predict_proba(x),
            TrainedModel::Lsvm(model) => model.predict_proba(x),
            TrainedModel::Gnb(model) => model.predict_proba(x),
        };
        Ok(p.mapv(|v| v.clamp(0.0, 1.0)))
    }
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
pub(crate) fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}
