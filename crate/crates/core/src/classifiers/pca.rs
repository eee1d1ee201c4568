use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use super::ClassifierError;

/// Principal directions of centered training data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pca {
    pub mean: Vec<f64>,
    /// `k x m`, orthonormal rows, ordered by non-increasing explained variance.
    pub components: Array2<f64>,
    pub explained_variance: Vec<f64>,
}

/// Fits `k` principal components of `x` (rows are samples).
///
/// Uses the eigen-decomposition of whichever of `X Xᵀ` and `Xᵀ X` is smaller. Directions with
/// zero variance are completed to an orthonormal set. Each component's largest-magnitude entry
/// is made positive.
pub fn pca_fit(x: ArrayView2<'_, f64>, k: usize) -> Result<Pca, ClassifierError> {
    let (n, m) = x.dim();
    let max = n.min(m);
    if k == 0 || k > max {
        return Err(ClassifierError::BadK { k, max });
    }
    let mean = x.mean_axis(Axis(0)).unwrap_or_else(|| Array1::zeros(m));
    let xc = &x - &mean.view().insert_axis(Axis(0));
    let denom = if n > 1 { (n - 1) as f64 } else { 1.0 };

    let mut dirs: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut vars: Vec<f64> = Vec::with_capacity(k);
    if n <= m {
        let gram = xc.dot(&xc.t());
        let (vals, vecs) = sorted_eigen(&gram);
        let floor = vals.first().copied().unwrap_or(0.0).max(0.0) * 1e-12 * n as f64;
        for (i, &lambda) in vals.iter().enumerate().take(k) {
            if lambda <= floor || lambda <= 0.0 {
                break;
            }
            let u = Array1::from_iter((0..n).map(|r| vecs[(r, i)]));
            let v = xc.t().dot(&u) / lambda.sqrt();
            dirs.push(v.to_vec());
            vars.push(lambda / denom);
        }
    } else {
        let cov = xc.t().dot(&xc);
        let (vals, vecs) = sorted_eigen(&cov);
        for (i, &lambda) in vals.iter().enumerate().take(k) {
            dirs.push((0..m).map(|r| vecs[(r, i)]).collect());
            vars.push(lambda.max(0.0) / denom);
        }
    }

    orthonormalize(&mut dirs);
    let mut basis = 0;
    while dirs.len() < k && basis < m {
        let mut e = vec![0.0; m];
        e[basis] = 1.0;
        basis += 1;
        if let Some(v) = reject(&dirs, e) {
            dirs.push(v);
            vars.push(0.0);
        }
    }

    let mut components = Array2::zeros((k, m));
    for (i, mut d) in dirs.into_iter().enumerate() {
        let lead = d
            .iter()
            .enumerate()
            .fold((0, 0.0f64), |(bi, bv), (j, v)| if v.abs() > bv { (j, v.abs()) } else { (bi, bv) })
            .0;
        if d[lead] < 0.0 {
            d.iter_mut().for_each(|v| *v = -*v);
        }
        components.row_mut(i).assign(&Array1::from(d));
    }
    Ok(Pca {
        mean: mean.to_vec(),
        components,
        explained_variance: vars,
    })
}

fn sorted_eigen(sym: &Array2<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let d = sym.nrows();
    let mat = DMatrix::from_fn(d, d, |i, j| 0.5 * (sym[[i, j]] + sym[[j, i]]));
    let eig = SymmetricEigen::new(mat);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = DMatrix::from_fn(d, d, |r, c| eig.eigenvectors[(r, order[c])]);
    (vals, vecs)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Removes components along `basis` (twice, for stability); `None` if little remains.
fn reject(basis: &[Vec<f64>], mut v: Vec<f64>) -> Option<Vec<f64>> {
    for _ in 0..2 {
        for b in basis {
            let p = dot(b, &v);
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= p * y);
        }
    }
    let norm = dot(&v, &v).sqrt();
    (norm > 1e-6).then(|| v.into_iter().map(|x| x / norm).collect())
}

fn orthonormalize(dirs: &mut Vec<Vec<f64>>) {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(dirs.len());
    for d in dirs.drain(..) {
        if let Some(v) = reject(&out, d) {
            out.push(v);
        }
    }
    *dirs = out;
}

impl Pca {
    pub fn k(&self) -> usize {
        self.components.nrows()
    }

    pub fn input_width(&self) -> usize {
        self.mean.len()
    }

    pub fn transform(&self, x: ArrayView2<'_, f64>) -> Array2<f64> {
        let mean = Array1::from(self.mean.clone());
        (&x - &mean.view().insert_axis(Axis(0))).dot(&self.components.t())
    }

    pub fn inverse_transform(&self, z: ArrayView2<'_, f64>) -> Array2<f64> {
        let mean = Array1::from(self.mean.clone());
        z.dot(&self.components) + mean.view().insert_axis(Axis(0))
    }
}
