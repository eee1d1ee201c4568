use ndarray::{Array1, Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use super::Dataset;

/// Euclidean k-nearest neighbours; probability is the positive fraction among neighbours.
/// Equal distances are broken by training-row order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Knn {
    pub k: usize,
    pub x: Array2<f64>,
    pub y: Vec<u8>,
}

impl Knn {
    pub fn fit(data: &Dataset, k: usize) -> Self {
        Self {
            k: k.min(data.n()),
            x: data.x.clone(),
            y: data.y.clone(),
        }
    }

    pub fn predict_proba(&self, q: ArrayView2<'_, f64>) -> Array1<f64> {
        let mut dist: Vec<(f64, usize)> = Vec::with_capacity(self.x.nrows());
        Array1::from_iter(q.rows().into_iter().map(|row| {
            dist.clear();
            dist.extend(self.x.rows().into_iter().enumerate().map(|(i, r)| {
                let d: f64 = r.iter().zip(row.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
                (d, i)
            }));
            dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let votes = dist[..self.k].iter().filter(|(_, i)| self.y[*i] == 1).count();
            votes as f64 / self.k as f64
        }))
    }
}
