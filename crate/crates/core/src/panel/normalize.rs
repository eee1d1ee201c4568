use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::{FeaturePanel, PanelError};

/// Stdev below this is treated as a constant feature.
pub const STDEV_FLOOR: f64 = 1e-12;

/// Per-feature z-score statistics frozen from a training window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub mean: Vec<f64>,
    pub stdev: Vec<f64>,
}

/// Fits per-feature mean and population stdev over `days` (panel day indices) across all coins.
pub fn fit_normalizer(panel: &FeaturePanel, days: Range<usize>) -> Result<Normalizer, PanelError> {
    if days.is_empty() || panel.num_coins() == 0 {
        return Err(PanelError::EmptyRange);
    }
    if days.end > panel.num_days() {
        return Err(PanelError::Manifest(format!(
            "normalizer range {days:?} exceeds {} panel days",
            panel.num_days()
        )));
    }
    let width = panel.width();
    let n = (days.len() * panel.num_coins()) as f64;
    let mut mean = vec![0.0; width];
    for c in 0..panel.num_coins() {
        for d in days.clone() {
            for (m, x) in mean.iter_mut().zip(panel.row(c, d)) {
                *m += x;
            }
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0; width];
    for c in 0..panel.num_coins() {
        for d in days.clone() {
            for ((v, x), m) in var.iter_mut().zip(panel.row(c, d)).zip(&mean) {
                *v += (x - m) * (x - m);
            }
        }
    }
    let stdev = var.into_iter().map(|v| (v / n).sqrt()).collect();
    Ok(Normalizer { mean, stdev })
}

impl Normalizer {
    pub fn width(&self) -> usize {
        self.mean.len()
    }

    pub fn transform_into(&self, row: &[f64], out: &mut [f64]) {
        for (((o, x), m), s) in out.iter_mut().zip(row).zip(&self.mean).zip(&self.stdev) {
            *o = if *s < STDEV_FLOOR { 0.0 } else { (x - m) / s };
        }
    }

    pub fn transform_row(&self, row: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; row.len()];
        self.transform_into(row, &mut out);
        out
    }

    /// Transforms every (coin, day) cell with the frozen statistics.
    pub fn apply(&self, panel: &FeaturePanel) -> Result<FeaturePanel, PanelError> {
        if panel.width() != self.width() {
            return Err(PanelError::Manifest(format!(
                "normalizer width {} does not match panel width {}",
                self.width(),
                panel.width()
            )));
        }
        let mut out = panel.clone();
        for c in 0..panel.num_coins() {
            for d in 0..panel.num_days() {
                self.transform_into(panel.row(c, d), out.row_mut(c, d));
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::panel::{Day, FillPolicy, Group};
    use proptest::prelude::*;

    fn panel(cols: &[Vec<f64>], coins: usize) -> FeaturePanel {
        // cols[j][coin * days + day]
        let width = cols.len();
        let days = cols[0].len() / coins;
        let mut values = Vec::new();
        for c in 0..coins {
            for d in 0..days {
                for col in cols {
                    values.push(col[c * days + d]);
                }
            }
        }
        let day0 = Day::from_ymd_opt(2018, 1, 1).unwrap();
        FeaturePanel::from_dense(
            (0..coins).map(|c| format!("C{c}")).collect(),
            (0..days).map(|d| day0 + chrono::Days::new(d as u64)).collect(),
            &[(Group::E, width)],
            FillPolicy::Zero,
            values,
        )
        .unwrap()
    }

    #[test]
    fn fit_uses_train_range_only() {
        let p = panel(&[vec![2.0, 4.0, 6.0, 1000.0]], 1);
        let n = fit_normalizer(&p, 0..3).unwrap();
        assert!((n.mean[0] - 4.0).abs() < 1e-12);
        assert!((n.stdev[0] - (8.0f64 / 3.0).sqrt()).abs() < 1e-12);
        let t = n.apply(&p).unwrap();
        let m: f64 = (0..3).map(|d| t.row(0, d)[0]).sum::<f64>() / 3.0;
        assert!(m.abs() < 1e-12);
    }

    #[test]
    fn constant_column_maps_to_zero() {
        let p = panel(&[vec![5.0, 5.0, 5.0, 9.0]], 1);
        let n = fit_normalizer(&p, 0..3).unwrap();
        let t = n.apply(&p).unwrap();
        for d in 0..4 {
            assert_eq!(t.row(0, d)[0], 0.0);
        }
    }

    #[test]
    fn test_day_at_train_mean_maps_to_zero() {
        let p = panel(&[vec![2.0, 4.0, 6.0, 4.0]], 1);
        let n = fit_normalizer(&p, 0..3).unwrap();
        assert_eq!(n.transform_row(p.row(0, 3))[0], 0.0);
    }

    #[test]
    fn empty_range() {
        let p = panel(&[vec![1.0, 2.0]], 1);
        assert!(matches!(fit_normalizer(&p, 1..1), Err(PanelError::EmptyRange)));
    }

    proptest! {
        #[test]
        fn refit_on_normalized_train_is_standard(
            raw in prop::collection::vec(-50.0f64..50.0, 24),
            scale in 0.1f64..100.0,
        ) {
            let col2: Vec<f64> = raw.iter().map(|x| x * scale + 3.0).collect();
            let p = panel(&[raw.clone(), col2], 2);
            let n = fit_normalizer(&p, 0..8).unwrap();
            let t = n.apply(&p).unwrap();
            let again = fit_normalizer(&t, 0..8).unwrap();
            for j in 0..2 {
                if n.stdev[j] >= STDEV_FLOOR {
                    prop_assert!(again.mean[j].abs() < 1e-6);
                    prop_assert!((again.stdev[j] - 1.0).abs() < 1e-6);
                }
            }
        }

        #[test]
        fn fit_ignores_rows_outside_range(
            raw in prop::collection::vec(-50.0f64..50.0, 20),
            junk in prop::collection::vec(-1e6f64..1e6, 10),
        ) {
            let a = panel(std::slice::from_ref(&raw), 2);
            let mut mixed = raw.clone();
            // overwrite test days 7..10 for both coins
            for c in 0..2 {
                for d in 7..10 {
                    mixed[c * 10 + d] = junk[c * 5 + d - 7];
                }
            }
            let b = panel(&[mixed], 2);
            prop_assert_eq!(fit_normalizer(&a, 0..7).unwrap(), fit_normalizer(&b, 0..7).unwrap());
        }
    }
}
