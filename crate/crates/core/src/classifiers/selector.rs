use ndarray::{Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use super::{anova_f_scores, pca_fit, select_top_k, ClassifierError, Dataset, Pca};

/// Feature-selection method and its target dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum SelectorSpec {
    /// Pass all columns through.
    None,
    /// Project onto the top `k` principal components (capped at `min(n, m)`).
    Pca { k: usize },
    /// Keep the `k` columns with the largest ANOVA F score (capped at `m`).
    Anova { k: usize },
}

impl SelectorSpec {
    pub fn label(&self) -> String {
        match self {
            SelectorSpec::None => "none".into(),
            SelectorSpec::Pca { k } => format!("pca{k}"),
            SelectorSpec::Anova { k } => format!("anova{k}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum FeatureSelector {
    Identity { m: usize },
    Pca(Pca),
    Anova { m: usize, indices: Vec<usize> },
}

/// Fits a selector on training rows. `k` is capped at what the data supports. ANOVA on a
/// single-class training set falls back to the identity selection.
pub fn fit_selector(spec: SelectorSpec, data: &Dataset) -> Result<FeatureSelector, ClassifierError> {
    let (n, m) = (data.n(), data.m());
    match spec {
        SelectorSpec::None => Ok(FeatureSelector::Identity { m }),
        SelectorSpec::Pca { k } => {
            if k == 0 {
                return Err(ClassifierError::BadK { k, max: n.min(m) });
            }
            Ok(FeatureSelector::Pca(pca_fit(data.x.view(), k.min(n.min(m)))?))
        }
        SelectorSpec::Anova { k } => {
            if k == 0 {
                return Err(ClassifierError::BadK { k, max: m });
            }
            match anova_f_scores(data) {
                Ok(scores) => Ok(FeatureSelector::Anova {
                    m,
                    indices: select_top_k(&scores, k.min(m))?,
                }),
                Err(ClassifierError::SingleClass) => Ok(FeatureSelector::Identity { m }),
                Err(e) => Err(e),
            }
        }
    }
}

impl FeatureSelector {
    pub fn input_width(&self) -> usize {
        match self {
            FeatureSelector::Identity { m } | FeatureSelector::Anova { m, .. } => *m,
            FeatureSelector::Pca(p) => p.input_width(),
        }
    }

    pub fn output_width(&self) -> usize {
        match self {
            FeatureSelector::Identity { m } => *m,
            FeatureSelector::Anova { indices, .. } => indices.len(),
            FeatureSelector::Pca(p) => p.k(),
        }
    }

    pub fn transform(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>, ClassifierError> {
        if x.ncols() != self.input_width() {
            return Err(ClassifierError::DimMismatch {
                expected: self.input_width(),
                found: x.ncols(),
            });
        }
        Ok(match self {
            FeatureSelector::Identity { .. } => x.to_owned(),
            FeatureSelector::Anova { indices, .. } => x.select(Axis(1), indices),
            FeatureSelector::Pca(p) => p.transform(x),
        })
    }
}
