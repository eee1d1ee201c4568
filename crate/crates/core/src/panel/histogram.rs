use super::PanelError;

/// Bins `values` into half-open intervals `[e_i, e_{i+1})`, the last one closed.
///
/// Values outside the edge range are clamped into the end bins, so un-normalized counts
/// always total `values.len()`. NaN values are skipped. With `normalize`, counts are
/// divided by `max(1, values.len())`.
pub fn histogram_features(values: &[f64], edges: &[f64], normalize: bool) -> Result<Vec<f64>, PanelError> {
    if edges.len() < 2 || edges.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(PanelError::BadEdges);
    }
    let bins = edges.len() - 1;
    let mut counts = vec![0.0; bins];
    for &v in values.iter().filter(|v| !v.is_nan()) {
        let above = edges.partition_point(|&e| e <= v);
        let bin = above.saturating_sub(1).min(bins - 1);
        counts[bin] += 1.0;
    }
    if normalize {
        let n = values.len().max(1) as f64;
        counts.iter_mut().for_each(|c| *c /= n);
    }
    Ok(counts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn direct_count() {
        assert_eq!(histogram_features(&[1.0, 2.0, 3.0, 4.0], &[0.0, 2.5, 5.0], false).unwrap(), vec![2.0, 2.0]);
    }

    #[test]
    fn empty_values_normalized() {
        assert_eq!(histogram_features(&[], &[0.0, 1.0, 2.0], true).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn out_of_range_clamped() {
        assert_eq!(histogram_features(&[-1.0, 99.0], &[0.0, 1.0, 2.0], false).unwrap(), vec![1.0, 1.0]);
    }

    #[test]
    fn last_bin_is_closed_and_interior_edges_half_open() {
        assert_eq!(histogram_features(&[1.0, 2.0], &[0.0, 1.0, 2.0], false).unwrap(), vec![0.0, 2.0]);
    }

    #[test]
    fn bad_edges() {
        assert!(matches!(histogram_features(&[1.0], &[0.0], false), Err(PanelError::BadEdges)));
        assert!(matches!(histogram_features(&[1.0], &[0.0, 0.0], false), Err(PanelError::BadEdges)));
        assert!(matches!(histogram_features(&[1.0], &[1.0, 0.5, 2.0], false), Err(PanelError::BadEdges)));
    }

    proptest! {
        #[test]
        fn counts_total_input_length(
            values in prop::collection::vec(-100.0f64..100.0, 0..200),
            start in -10.0f64..10.0,
            steps in prop::collection::vec(0.01f64..5.0, 1..12),
        ) {
            let mut edges = vec![start];
            for s in steps {
                let last = *edges.last().unwrap();
                edges.push(last + s);
            }
            let h = histogram_features(&values, &edges, false).unwrap();
            prop_assert_eq!(h.len(), edges.len() - 1);
            prop_assert_eq!(h.iter().sum::<f64>() as usize, values.len());
        }
    }
}
