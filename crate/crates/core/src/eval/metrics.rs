use statrs::distribution::{ContinuousCDF, StudentsT};

use super::EvalError;

/// Probability that a random positive outscores a random negative, ties counting half.
///
/// Computed from tie groups in sorted order; the numerator is kept in integer half-units,
/// so the result equals brute-force pair counting exactly.
pub fn auc(scores: &[f64], labels: &[u8]) -> Result<f64, EvalError> {
    if scores.len() != labels.len() {
        return Err(EvalError::LengthMismatch {
            left: scores.len(),
            right: labels.len(),
        });
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(EvalError::NonFinite("score"));
    }
    let positives = labels.iter().filter(|&&y| y == 1).count() as u64;
    let negatives = labels.len() as u64 - positives;
    if positives == 0 || negatives == 0 {
        return Err(EvalError::SingleClass);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // 2 * (strictly-above pairs) + tied pairs.
    let mut half_units: u64 = 0;
    let mut negatives_below: u64 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        let (mut pos, mut neg) = (0u64, 0u64);
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            if labels[order[j]] == 1 {
                pos += 1;
            } else {
                neg += 1;
            }
            j += 1;
        }
        half_units += 2 * pos * negatives_below + pos * neg;
        negatives_below += neg;
        i = j;
    }
    Ok(half_units as f64 / (2 * positives * negatives) as f64)
}

/// `AUC(A) / AUC(B)`; above 1 favors A.
pub fn lift(auc_a: f64, auc_b: f64) -> Result<f64, EvalError> {
    if !(auc_b > 0.0) {
        return Err(EvalError::ZeroBaseline);
    }
    Ok(auc_a / auc_b)
}

/// Paired two-sided Student's t-test on `a - b`; returns `(t, p)`.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<(f64, f64), EvalError> {
    if a.len() != b.len() {
        return Err(EvalError::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let n = a.len();
    if n < 2 {
        return Err(EvalError::InsufficientData(format!("paired t-test needs at least 2 pairs, got {n}")));
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    if diffs.iter().any(|d| !d.is_finite()) {
        return Err(EvalError::NonFinite("metric"));
    }
    let mean = diffs.iter().sum::<f64>() / n as f64;
    let var = diffs.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / (n - 1) as f64;
    if var == 0.0 {
        if mean == 0.0 {
            return Ok((0.0, 1.0));
        }
        return Err(EvalError::DegenerateVariance);
    }
    let t = mean / (var / n as f64).sqrt();
    let dist = StudentsT::new(0.0, 1.0, (n - 1) as f64).expect("positive degrees of freedom");
    let p = (2.0 * dist.sf(t.abs())).min(1.0);
    Ok((t, p))
}
