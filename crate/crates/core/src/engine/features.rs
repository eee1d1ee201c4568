use super::EngineError;
use crate::panel::{FeaturePanel, Normalizer};
use crate::par;
use crate::similarity::{block_width, similarity_block, SimilarityKind};

/// Concatenates the raw feature rows for days `day - lag .. day`, oldest first.
pub fn build_lagged(panel: &FeaturePanel, coin: usize, day: usize, lag: usize) -> Result<Vec<f64>, EngineError> {
    if day < lag || lag == 0 {
        return Err(EngineError::InsufficientHistory { day, lag });
    }
    if day > panel.num_days() {
        return Err(EngineError::AxisMismatch(format!("day index {day} beyond panel")));
    }
    let mut out = Vec::with_capacity(lag * panel.width());
    for d in day - lag..day {
        out.extend_from_slice(panel.row(coin, d));
    }
    Ok(out)
}

/// Width of one model input row: lagged block, similarity block, and peer probabilities.
pub fn design_width(per_day_width: usize, lag: usize, coins: usize, kinds: usize) -> usize {
    per_day_width * lag + block_width(coins, kinds) + coins.saturating_sub(1)
}

/// Lagged vectors and similarity blocks of every coin for one day.
type SlotFeatures = (Vec<Vec<f64>>, Vec<Vec<f64>>);

/// Normalized lagged vectors and similarity blocks for a set of target days.
///
/// Shared by training and inference so both assemble identical rows.
#[derive(Debug, Clone)]
pub struct FeatureContext {
    coins: usize,
    lagged_width: usize,
    sim_width: usize,
    days: Vec<usize>,
    lagged: Vec<Vec<Vec<f64>>>,
    sims: Vec<Vec<Vec<f64>>>,
}

impl FeatureContext {
    /// `days` are panel day indices being predicted; each needs `lag` earlier panel days.
    pub fn build(
        panel: &FeaturePanel,
        normalizer: &Normalizer,
        days: &[usize],
        lag: usize,
        kinds: &[SimilarityKind],
    ) -> Result<Self, EngineError> {
        if normalizer.width() != panel.width() {
            return Err(EngineError::WidthMismatch {
                expected: normalizer.width(),
                found: panel.width(),
            });
        }
        if let Some(&bad) = days.iter().find(|&&d| d < lag || lag == 0) {
            return Err(EngineError::InsufficientHistory { day: bad, lag });
        }
        if let Some(&bad) = days.iter().find(|&&d| d > panel.num_days()) {
            return Err(EngineError::AxisMismatch(format!("day index {bad} beyond panel")));
        }
        let coins = panel.num_coins();
        let width = panel.width();
        let per_slot = par::try_map(days, |&day| -> Result<SlotFeatures, EngineError> {
            let lagged: Vec<Vec<f64>> = (0..coins)
                .map(|c| {
                    let mut v = vec![0.0; lag * width];
                    for (k, d) in (day - lag..day).enumerate() {
                        normalizer.transform_into(panel.row(c, d), &mut v[k * width..(k + 1) * width]);
                    }
                    v
                })
                .collect();
            let refs: Vec<&[f64]> = lagged.iter().map(Vec::as_slice).collect();
            let sims = if kinds.is_empty() {
                vec![Vec::new(); coins]
            } else {
                (0..coins)
                    .map(|c| similarity_block(&refs, c, kinds))
                    .collect::<Result<_, _>>()?
            };
            Ok((lagged, sims))
        })?;
        let (lagged, sims) = per_slot.into_iter().unzip();
        Ok(Self {
            coins,
            lagged_width: lag * width,
            sim_width: block_width(coins, kinds.len()),
            days: days.to_vec(),
            lagged,
            sims,
        })
    }

    pub fn days(&self) -> &[usize] {
        &self.days
    }

    pub fn len(&self) -> usize {
        self.days.len()
    }

    pub fn is_empty(&self) -> bool {
        self.days.is_empty()
    }

    pub fn width(&self) -> usize {
        self.lagged_width + self.sim_width + self.coins.saturating_sub(1)
    }

    pub fn lagged(&self, slot: usize, coin: usize) -> &[f64] {
        &self.lagged[slot][coin]
    }

    pub fn similarity(&self, slot: usize, coin: usize) -> &[f64] {
        &self.sims[slot][coin]
    }

    /// Offset of the peer-probability block within a row.
    pub fn probability_offset(&self) -> usize {
        self.lagged_width + self.sim_width
    }

    /// Writes `lf ⊕ s ⊕ p_{-coin}` for one slot. `probs` holds every coin's probability.
    pub fn write_row(&self, slot: usize, coin: usize, probs: &[f64], out: &mut [f64]) {
        let (lf, rest) = out.split_at_mut(self.lagged_width);
        lf.copy_from_slice(&self.lagged[slot][coin]);
        let (sim, p) = rest.split_at_mut(self.sim_width);
        sim.copy_from_slice(&self.sims[slot][coin]);
        write_peer_probs(probs, coin, p);
    }

    pub fn row(&self, slot: usize, coin: usize, probs: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.width()];
        self.write_row(slot, coin, probs, &mut out);
        out
    }
}

/// Every coin's probability except `coin`'s, in coin order.
pub(crate) fn write_peer_probs(probs: &[f64], coin: usize, out: &mut [f64]) {
    let mut k = 0;
    for (i, &p) in probs.iter().enumerate() {
        if i != coin {
            out[k] = p;
            k += 1;
        }
    }
}
