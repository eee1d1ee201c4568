use ndarray::{Array1, ArrayView1, ArrayView2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::{par, seed};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum Node {
    Leaf { p: f64 },
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

/// CART tree grown to purity (or `max_depth`); leaves hold the positive fraction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    nodes: Vec<Node>,
}

impl DecisionTree {
    fn grow(x: ArrayView2<'_, f64>, y: &[u8], sample: Vec<usize>, max_features: usize, max_depth: Option<usize>, rng: &mut seed::Rng) -> Self {
        let m = x.ncols();
        let mut nodes = vec![Node::Leaf { p: 0.0 }];
        let mut stack = vec![(0usize, sample, 0usize)];
        let mut features: Vec<usize> = (0..m).collect();
        while let Some((id, idx, depth)) = stack.pop() {
            let pos = idx.iter().filter(|&&i| y[i] == 1).count();
            let p = pos as f64 / idx.len() as f64;
            let pure = pos == 0 || pos == idx.len();
            if pure || idx.len() < 2 || max_depth.is_some_and(|d| depth >= d) {
                nodes[id] = Node::Leaf { p };
                continue;
            }
            // Partial Fisher-Yates: the first `max_features` entries are the random subset; the
            // rest are tried in shuffled order only if the subset has no usable split.
            for i in 0..m {
                let j = rng.random_range(i..m);
                features.swap(i, j);
            }
            let mut best: Option<(f64, usize, f64)> = None;
            for (tried, &f) in features.iter().enumerate() {
                if tried >= max_features && best.is_some() {
                    break;
                }
                if let Some((score, thr)) = best_split(x.column(f), y, &idx, pos) {
                    if best.is_none_or(|(s, _, _)| score < s) {
                        best = Some((score, f, thr));
                    }
                }
            }
            let Some((_, feature, threshold)) = best else {
                nodes[id] = Node::Leaf { p };
                continue;
            };
            let (li, ri): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| x[[i, feature]] <= threshold);
            let left = nodes.len();
            nodes.push(Node::Leaf { p: 0.0 });
            let right = nodes.len();
            nodes.push(Node::Leaf { p: 0.0 });
            nodes[id] = Node::Split { feature, threshold, left, right };
            stack.push((right, ri, depth + 1));
            stack.push((left, li, depth + 1));
        }
        Self { nodes }
    }

    pub fn predict_row(&self, row: ArrayView1<'_, f64>) -> f64 {
        let mut id = 0;
        loop {
            match self.nodes[id] {
                Node::Leaf { p } => return p,
                Node::Split { feature, threshold, left, right } => {
                    id = if row[feature] <= threshold { left } else { right };
                }
            }
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }
}

/// Lowest weighted Gini over thresholds of one column, or `None` if the column is constant.
fn best_split(col: ArrayView1<'_, f64>, y: &[u8], idx: &[usize], pos: usize) -> Option<(f64, f64)> {
    let mut pairs: Vec<(f64, u8)> = idx.iter().map(|&i| (col[i], y[i])).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let n = pairs.len() as f64;
    let total_pos = pos as f64;
    let mut left_pos = 0.0;
    let mut best: Option<(f64, f64)> = None;
    for i in 0..pairs.len() - 1 {
        left_pos += f64::from(pairs[i].1);
        if pairs[i].0 == pairs[i + 1].0 {
            continue;
        }
        let nl = (i + 1) as f64;
        let nr = n - nl;
        let right_pos = total_pos - left_pos;
        let gini = |k: f64, c: f64| {
            let q = k / c;
            2.0 * q * (1.0 - q)
        };
        let score = nl * gini(left_pos, nl) + nr * gini(right_pos, nr);
        if best.is_none_or(|(s, _)| score < s) {
            let (a, b) = (pairs[i].0, pairs[i + 1].0);
            let mid = a + (b - a) / 2.0;
            let thr = if mid < b { mid } else { a };
            best = Some((score, thr));
        }
    }
    best
}

/// Bagged decision trees; probability is the mean of leaf positive fractions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    pub trees: Vec<DecisionTree>,
    pub input_width: usize,
}

impl RandomForest {
    /// Tree `t` draws from its own stream `derive(seed, [t])`, so results do not depend on
    /// how trees are scheduled across threads.
    pub fn fit(
        data: &Dataset,
        trees: usize,
        max_features: Option<usize>,
        max_depth: Option<usize>,
        bootstrap: bool,
        seed: u64,
    ) -> Self {
        let m = data.m();
        let per_split = max_features
            .unwrap_or_else(|| (m as f64).sqrt().ceil() as usize)
            .clamp(1, m.max(1));
        let x = data.x.view();
        let n = data.n();
        let grown = par::map_range(trees, |t| {
            let mut rng = seed::rng(seed::derive(seed, &[t as u64]));
            let sample: Vec<usize> = if bootstrap {
                (0..n).map(|_| rng.random_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            DecisionTree::grow(x, &data.y, sample, per_split, max_depth, &mut rng)
        });
        Self {
            trees: grown,
            input_width: m,
        }
    }

    pub fn predict_proba(&self, x: ArrayView2<'_, f64>) -> Array1<f64> {
        let k = self.trees.len() as f64;
        Array1::from_iter(
            x.rows()
                .into_iter()
                .map(|row| self.trees.iter().map(|t| t.predict_row(row)).sum::<f64>() / k),
        )
    }
}
