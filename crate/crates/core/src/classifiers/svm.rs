use ndarray::{Array1, ArrayView1, ArrayView2};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{sigmoid, softplus, Dataset};
use crate::seed;

/// Linear SVM (hinge loss, `l2/2 |w|^2 + sum hinge`) trained by dual coordinate descent.
///
/// The bias is learned as the weight of a constant feature. Probabilities come from
/// `sigmoid(scale * margin)`, with `scale >= 0` fitted on training margins against
/// Platt-smoothed targets, so a zero margin maps to exactly 0.5.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSvm {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub scale: f64,
}

impl LinearSvm {
    pub fn fit(data: &Dataset, l2: f64, tol: f64, max_epochs: usize, seed: u64) -> Self {
        let (n, m) = (data.n(), data.m());
        let c = 1.0 / l2;
        let x = data.x.view();
        let sign: Vec<f64> = data.y.iter().map(|&v| if v == 1 { 1.0 } else { -1.0 }).collect();
        let qii: Vec<f64> = x.rows().into_iter().map(|r| r.dot(&r) + 1.0).collect();
        let mut alpha = vec![0.0; n];
        let mut w = Array1::<f64>::zeros(m);
        let mut b = 0.0;
        let mut order: Vec<usize> = (0..n).collect();
        let mut rng = seed::rng(seed);

        for _ in 0..max_epochs {
            order.shuffle(&mut rng);
            let (mut pg_max, mut pg_min) = (f64::NEG_INFINITY, f64::INFINITY);
            for &i in &order {
                let row = x.row(i);
                let g = sign[i] * (row.dot(&w) + b) - 1.0;
                let pg = if alpha[i] == 0.0 {
                    g.min(0.0)
                } else if alpha[i] == c {
                    g.max(0.0)
                } else {
                    g
                };
                pg_max = pg_max.max(pg);
                pg_min = pg_min.min(pg);
                if pg.abs() > 1e-14 {
                    let old = alpha[i];
                    alpha[i] = (old - g / qii[i]).clamp(0.0, c);
                    let delta = (alpha[i] - old) * sign[i];
                    w.scaled_add(delta, &row);
                    b += delta;
                }
            }
            if pg_max - pg_min < tol {
                break;
            }
        }

        let margins: Vec<f64> = x.rows().into_iter().map(|r| r.dot(&w) + b).collect();
        let scale = fit_scale(&margins, &data.y);
        Self {
            weights: w.to_vec(),
            bias: b,
            scale,
        }
    }

    pub fn decision(&self, x: ArrayView2<'_, f64>) -> Array1<f64> {
        x.dot(&ArrayView1::from(&self.weights[..])) + self.bias
    }

    pub fn predict_proba(&self, x: ArrayView2<'_, f64>) -> Array1<f64> {
        self.decision(x).mapv(|f| sigmoid(self.scale * f))
    }
}

/// One-parameter logistic calibration `p = sigmoid(a f)` fitted by safeguarded Newton.
fn fit_scale(margins: &[f64], y: &[u8]) -> f64 {
    let pos = y.iter().filter(|&&v| v == 1).count() as f64;
    let neg = y.len() as f64 - pos;
    let hi = (pos + 1.0) / (pos + 2.0);
    let lo = 1.0 / (neg + 2.0);
    let target: Vec<f64> = y.iter().map(|&v| if v == 1 { hi } else { lo }).collect();
    let objective = |a: f64| -> f64 {
        margins
            .iter()
            .zip(&target)
            .map(|(&f, &t)| softplus(a * f) - t * a * f)
            .sum()
    };
    let mut a = 1.0;
    let mut fa = objective(a);
    for _ in 0..100 {
        let (mut g, mut h) = (0.0, 0.0);
        for (&f, &t) in margins.iter().zip(&target) {
            let p = sigmoid(a * f);
            g += (p - t) * f;
            h += p * (1.0 - p) * f * f;
        }
        if g.abs() < 1e-12 || h <= 1e-300 {
            break;
        }
        let step = g / h;
        let mut t = 1.0;
        let mut moved = false;
        for _ in 0..60 {
            let cand = a - t * step;
            let fc = objective(cand);
            if fc <= fa {
                moved = (cand - a).abs() > 1e-15 * (1.0 + a.abs());
                a = cand;
                fa = fc;
                break;
            }
            t *= 0.5;
        }
        if !moved {
            break;
        }
    }
    a.max(0.0)
}
