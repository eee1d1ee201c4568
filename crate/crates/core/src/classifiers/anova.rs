use super::{ClassifierError, Dataset};

/// Score given to a feature whose classes are internally constant but differ in mean.
pub const F_SENTINEL: f64 = 1e18;

/// Two-group one-way ANOVA F statistic per column: `(SSB / 1) / (SSW / (n - 2))`.
pub fn anova_f_scores(data: &Dataset) -> Result<Vec<f64>, ClassifierError> {
    if data.single_class().is_some() {
        return Err(ClassifierError::SingleClass);
    }
    let n = data.n();
    let n1 = data.positives() as f64;
    let n0 = n as f64 - n1;
    let df_within = n.saturating_sub(2) as f64;
    let scores = data
        .x
        .columns()
        .into_iter()
        .map(|col| {
            let (mut s0, mut s1) = (0.0, 0.0);
            for (v, &y) in col.iter().zip(&data.y) {
                if y == 1 {
                    s1 += v;
                } else {
                    s0 += v;
                }
            }
            let (m0, m1) = (s0 / n0, s1 / n1);
            let grand = (s0 + s1) / n as f64;
            let ssb = n0 * (m0 - grand).powi(2) + n1 * (m1 - grand).powi(2);
            let ssw: f64 = col
                .iter()
                .zip(&data.y)
                .map(|(v, &y)| (v - if y == 1 { m1 } else { m0 }).powi(2))
                .sum();
            if ssw == 0.0 || df_within == 0.0 {
                if ssb > 0.0 {
                    F_SENTINEL
                } else {
                    0.0
                }
            } else {
                ssb / (ssw / df_within)
            }
        })
        .collect();
    Ok(scores)
}

/// Column indices of the `k` largest scores (ties to the lower index), returned ascending.
pub fn select_top_k(scores: &[f64], k: usize) -> Result<Vec<usize>, ClassifierError> {
    if k == 0 || k > scores.len() {
        return Err(ClassifierError::BadK { k, max: scores.len() });
    }
    let key = |s: f64| if s.is_nan() { f64::NEG_INFINITY } else { s };
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| key(scores[b]).total_cmp(&key(scores[a])).then(a.cmp(&b)));
    let mut picked = order[..k].to_vec();
    picked.sort_unstable();
    Ok(picked)
}
