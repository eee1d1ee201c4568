//! Pairwise similarity between lagged feature vectors and per-coin similarity blocks.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// The five similarity functions. Euclidean and Manhattan are raw distances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimilarityKind {
    Euclidean,
    Manhattan,
    Cosine,
    Pcc,
    Scc,
}

impl SimilarityKind {
    pub const ALL: [SimilarityKind; 5] = [
        SimilarityKind::Euclidean,
        SimilarityKind::Manhattan,
        SimilarityKind::Cosine,
        SimilarityKind::Pcc,
        SimilarityKind::Scc,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SimilarityKind::Euclidean => "euclidean",
            SimilarityKind::Manhattan => "manhattan",
            SimilarityKind::Cosine => "cosine",
            SimilarityKind::Pcc => "pcc",
            SimilarityKind::Scc => "scc",
        }
    }

    /// True when larger values mean less similar.
    pub fn is_distance(self) -> bool {
        matches!(self, SimilarityKind::Euclidean | SimilarityKind::Manhattan)
    }
}

impl fmt::Display for SimilarityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SimilarityKind {
    type Err = SimilarityError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SimilarityKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| SimilarityError::UnknownKind(s.to_string()))
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum SimilarityError {
    #[error("vector lengths differ ({0} vs {1})")]
    DimMismatch(usize, usize),
    #[error("vectors must be nonempty")]
    Empty,
    #[error("target coin {target} out of range for {coins} coins")]
    NoTarget { target: usize, coins: usize },
    #[error("unknown similarity kind `{0}`")]
    UnknownKind(String),
}

/// Similarity of `u` and `v` under `kind`.
///
/// Zero-norm inputs to Cosine and zero-variance (or length-1) inputs to PCC/SCC yield 0.
pub fn similarity(kind: SimilarityKind, u: &[f64], v: &[f64]) -> Result<f64, SimilarityError> {
    if u.len() != v.len() {
        return Err(SimilarityError::DimMismatch(u.len(), v.len()));
    }
    if u.is_empty() {
        return Err(SimilarityError::Empty);
    }
    Ok(match kind {
        SimilarityKind::Euclidean => u.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt(),
        SimilarityKind::Manhattan => u.iter().zip(v).map(|(a, b)| (a - b).abs()).sum(),
        SimilarityKind::Cosine => cosine(u, v),
        SimilarityKind::Pcc => pearson(u, v),
        SimilarityKind::Scc => pearson(&average_ranks(u), &average_ranks(v)),
    })
}

fn cosine(u: &[f64], v: &[f64]) -> f64 {
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let nu = u.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nv = v.iter().map(|b| b * b).sum::<f64>().sqrt();
    if nu == 0.0 || nv == 0.0 {
        return 0.0;
    }
    (dot / (nu * nv)).clamp(-1.0, 1.0)
}

fn pearson(u: &[f64], v: &[f64]) -> f64 {
    let n = u.len() as f64;
    if u.len() < 2 {
        return 0.0;
    }
    let mu = u.iter().sum::<f64>() / n;
    let mv = v.iter().sum::<f64>() / n;
    let (mut suv, mut suu, mut svv) = (0.0, 0.0, 0.0);
    for (a, b) in u.iter().zip(v) {
        let (da, db) = (a - mu, b - mv);
        suv += da * db;
        suu += da * da;
        svv += db * db;
    }
    if suu == 0.0 || svv == 0.0 {
        return 0.0;
    }
    (suv / (suu.sqrt() * svv.sqrt())).clamp(-1.0, 1.0)
}

/// 1-based ranks with ties sharing the mean of their positions.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && x[order[j + 1]] == x[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

/// Similarities between the target's lagged vector and every other coin's, in coin order
/// and then `kinds` order. The target never appears against itself.
pub fn similarity_block(
    lagged: &[&[f64]],
    target: usize,
    kinds: &[SimilarityKind],
) -> Result<Vec<f64>, SimilarityError> {
    let own = *lagged.get(target).ok_or(SimilarityError::NoTarget {
        target,
        coins: lagged.len(),
    })?;
    let mut block = Vec::with_capacity(kinds.len() * lagged.len().saturating_sub(1));
    for (i, other) in lagged.iter().enumerate() {
        if i == target {
            continue;
        }
        for &kind in kinds {
            block.push(similarity(kind, other, own)?);
        }
    }
    Ok(block)
}

/// Width of a similarity block.
pub fn block_width(coins: usize, kinds: usize) -> usize {
    kinds * coins.saturating_sub(1)
}
