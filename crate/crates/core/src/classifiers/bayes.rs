use ndarray::{Array1, ArrayView2};
use serde::{Deserialize, Serialize};

use super::{sigmoid, Dataset};

/// Gaussian naive Bayes with per-class feature means and floored variances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianNb {
    /// Indexed by class (0, 1).
    pub log_prior: [f64; 2],
    pub mean: [Vec<f64>; 2],
    pub var: [Vec<f64>; 2],
}

impl GaussianNb {
    /// Both classes must be present.
    pub fn fit(data: &Dataset, var_floor: f64) -> Self {
        let m = data.m();
        let mut count = [0usize; 2];
        let mut mean = [vec![0.0; m], vec![0.0; m]];
        for (row, &y) in data.x.rows().into_iter().zip(&data.y) {
            let c = usize::from(y);
            count[c] += 1;
            for (s, v) in mean[c].iter_mut().zip(row) {
                *s += v;
            }
        }
        for c in 0..2 {
            mean[c].iter_mut().for_each(|s| *s /= count[c] as f64);
        }
        let mut var = [vec![0.0; m], vec![0.0; m]];
        for (row, &y) in data.x.rows().into_iter().zip(&data.y) {
            let c = usize::from(y);
            for ((s, v), mu) in var[c].iter_mut().zip(row).zip(&mean[c]) {
                *s += (v - mu) * (v - mu);
            }
        }
        for c in 0..2 {
            var[c].iter_mut().for_each(|s| *s = (*s / count[c] as f64).max(var_floor));
        }
        let n = data.n() as f64;
        Self {
            log_prior: [(count[0] as f64 / n).ln(), (count[1] as f64 / n).ln()],
            mean,
            var,
        }
    }

    fn log_joint(&self, c: usize, row: impl Iterator<Item = f64>) -> f64 {
        self.log_prior[c]
            + row
                .zip(self.mean[c].iter().zip(&self.var[c]))
                .map(|(x, (mu, v))| -0.5 * ((x - mu) * (x - mu) / v + (2.0 * std::f64::consts::PI * v).ln()))
                .sum::<f64>()
    }

    pub fn predict_proba(&self, x: ArrayView2<'_, f64>) -> Array1<f64> {
        Array1::from_iter(x.rows().into_iter().map(|row| {
            let l0 = self.log_joint(0, row.iter().copied());
            let l1 = self.log_joint(1, row.iter().copied());
            sigmoid(l1 - l0)
        }))
    }
}
