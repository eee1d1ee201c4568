use nalgebra::{DMatrix, DVector};
use ndarray::{Array1, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use super::{sigmoid, softplus, ClassifierError, Dataset};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub weights: Vec<f64>,
    pub intercept: f64,
}

/// Optimizer history from a logistic fit.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticTrace {
    /// Objective value before the first step and after every accepted step.
    pub losses: Vec<f64>,
    pub grad_norm: f64,
    pub iterations: usize,
}

/// Regularized negative log-likelihood and its gradient.
///
/// `theta` is `[w_1..w_m, b]`; the objective is
/// `sum_i softplus(z_i) - y_i z_i + l2/2 * |w|^2` with `z = X w + b`. The intercept is not penalized.
pub fn logistic_objective(theta: &[f64], x: ArrayView2<'_, f64>, y: &[u8], l2: f64) -> (f64, Vec<f64>) {
    let m = x.ncols();
    let w = ArrayView1::from(&theta[..m]);
    let b = theta[m];
    let z = x.dot(&w) + b;
    let mut loss = 0.5 * l2 * w.dot(&w);
    let mut resid = Array1::zeros(z.len());
    for i in 0..z.len() {
        let yi = f64::from(y[i]);
        loss += softplus(z[i]) - yi * z[i];
        resid[i] = sigmoid(z[i]) - yi;
    }
    let mut grad = (x.t().dot(&resid) + &(&w * l2)).to_vec();
    grad.push(resid.sum());
    (loss, grad)
}

fn objective_only(theta: &[f64], x: ArrayView2<'_, f64>, y: &[u8], l2: f64) -> f64 {
    let m = x.ncols();
    let w = ArrayView1::from(&theta[..m]);
    let z = x.dot(&w) + theta[m];
    0.5 * l2 * w.dot(&w)
        + z.iter()
            .zip(y)
            .map(|(&zi, &yi)| softplus(zi) - f64::from(yi) * zi)
            .sum::<f64>()
}

impl LogisticModel {
    /// Damped Newton iterations with Armijo backtracking; the objective never increases.
    pub fn fit(data: &Dataset, l2: f64, tol: f64, max_iter: usize) -> Result<(Self, LogisticTrace), ClassifierError> {
        let x = data.x.view();
        let (n, m) = (data.n(), data.m());
        let mut theta = vec![0.0; m + 1];
        let (mut loss, mut grad) = logistic_objective(&theta, x, &data.y, l2);
        let mut trace = LogisticTrace {
            losses: vec![loss],
            grad_norm: norm(&grad),
            iterations: 0,
        };

        while trace.iterations < max_iter && trace.grad_norm >= tol {
            trace.iterations += 1;
            let z = x.dot(&ArrayView1::from(&theta[..m])) + theta[m];
            let s: Array1<f64> = z.mapv(|zi| {
                let p = sigmoid(zi);
                p * (1.0 - p)
            });
            let xs = &x * &s.view().insert_axis(Axis(1)).mapv(f64::sqrt);
            let hww = xs.t().dot(&xs);
            let hwb = x.t().dot(&s);
            let mut h = DMatrix::<f64>::zeros(m + 1, m + 1);
            for i in 0..m {
                for j in 0..m {
                    h[(i, j)] = hww[[i, j]];
                }
                h[(i, i)] += l2;
                h[(i, m)] = hwb[i];
                h[(m, i)] = hwb[i];
            }
            h[(m, m)] = s.sum() + 1e-12 * n as f64;
            let g = DVector::from_column_slice(&grad);
            let step = match h.cholesky() {
                Some(ch) => ch.solve(&g),
                None => g.clone(),
            };
            let slope: f64 = g.dot(&step);

            let mut t = 1.0;
            let mut accepted = None;
            for _ in 0..60 {
                let cand: Vec<f64> = theta.iter().zip(step.iter()).map(|(a, d)| a - t * d).collect();
                let f = objective_only(&cand, x, &data.y, l2);
                if f <= loss - 1e-4 * t * slope {
                    accepted = Some(cand);
                    break;
                }
                t *= 0.5;
            }
            let Some(cand) = accepted else { break };
            theta = cand;
            let (f, g) = logistic_objective(&theta, x, &data.y, l2);
            loss = f;
            grad = g;
            trace.losses.push(loss);
            trace.grad_norm = norm(&grad);
        }

        let intercept = theta.pop().unwrap_or(0.0);
        Ok((Self { weights: theta, intercept }, trace))
    }

    pub fn decision(&self, x: ArrayView2<'_, f64>) -> Array1<f64> {
        x.dot(&ArrayView1::from(&self.weights[..])) + self.intercept
    }

    pub fn predict_proba(&self, x: ArrayView2<'_, f64>) -> Array1<f64> {
        self.decision(x).mapv(sigmoid)
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};

    #[test]
    fn separable_1d_is_confident() {
        let x = array![[-3.0], [-2.0], [-1.0], [1.0], [2.0], [3.0]];
        let d = Dataset::new(x, vec![0, 0, 0, 1, 1, 1]).unwrap();
        let (model, trace) = LogisticModel::fit(&d, 1.0, 1e-8, 500).unwrap();
        let p = model.predict_proba(array![[-10.0], [10.0]].view());
        assert!(p[0] < 0.05, "{p}");
        assert!(p[1] > 0.95, "{p}");
        assert!(trace.grad_norm < 1e-6);
        assert!(trace.losses.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn gradient_vanishes_at_optimum_on_noisy_data() {
        let x = Array2::from_shape_fn((50, 4), |(i, j)| ((i * 31 + j * 17) % 23) as f64 / 7.0 - 1.5);
        let y: Vec<u8> = (0..50).map(|i| u8::from((i * 13) % 7 < 3)).collect();
        let d = Dataset::new(x, y).unwrap();
        let (model, trace) = LogisticModel::fit(&d, 1.0, 1e-8, 500).unwrap();
        assert!(trace.grad_norm < 1e-6);
        let mut theta = model.weights.clone();
        theta.push(model.intercept);
        let (_, g) = logistic_objective(&theta, d.x.view(), &d.y, 1.0);
        assert!(norm(&g) < 1e-6);
    }
}
