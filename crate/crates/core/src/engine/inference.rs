use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::features::FeatureContext;
use super::training::{coin_order, day_ordinal, initial_probs, l2_distance};
use super::{EngineError, TrainedEnsemble, TAG_PREDICT_INIT};
use crate::panel::FeaturePanel;
use crate::par;

/// Converged up-probabilities for one day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    /// Panel day index predicted; equal to the panel length for the day after the last row.
    pub day: usize,
    pub probs: Vec<f64>,
    pub iterations: usize,
    /// L2 change of the probability vector in the final sweep.
    pub delta: f64,
}

#[derive(Debug, Clone, Default)]
pub struct PredictOptions {
    pub coin_order: Option<Vec<usize>>,
    /// Starting probabilities instead of uniform draws (e.g. the previous day's result).
    pub init: Option<Vec<f64>>,
}

/// Predicts day `day` from panel days `day - lag .. day`.
pub fn c2p2_predict(ensemble: &TrainedEnsemble, panel: &FeaturePanel, day: usize) -> Result<Prediction, EngineError> {
    c2p2_predict_with(ensemble, panel, day, &PredictOptions::default())
}

/// Jacobi sweeps: every model in a sweep sees the probabilities from the end of the
/// previous sweep. Runs while the change exceeds `epsilon` and fewer than `max_iter`
/// sweeps have run.
pub fn c2p2_predict_with(
    ensemble: &TrainedEnsemble,
    panel: &FeaturePanel,
    day: usize,
    options: &PredictOptions,
) -> Result<Prediction, EngineError> {
    let config = &ensemble.config;
    if panel.width() != ensemble.panel_width {
        return Err(EngineError::WidthMismatch {
            expected: ensemble.panel_width,
            found: panel.width(),
        });
    }
    if panel.coins() != ensemble.coins.as_slice() {
        return Err(EngineError::AxisMismatch("panel coins differ from the ensemble's".into()));
    }
    if day < config.lag {
        return Err(EngineError::InsufficientHistory { day, lag: config.lag });
    }
    let coins = panel.num_coins();
    let order = coin_order(options.coin_order.as_deref(), coins)?;
    let ctx = FeatureContext::build(panel, &ensemble.normalizer, &[day], config.lag, config.active_kinds())?;

    let mut probs = match &options.init {
        Some(p) if p.len() == coins => p.clone(),
        Some(p) => {
            return Err(EngineError::WidthMismatch {
                expected: coins,
                found: p.len(),
            })
        }
        None => {
            let ord = match panel.days().get(day) {
                Some(&d) => day_ordinal(d),
                None => day_ordinal(*panel.days().last().expect("nonempty panel")) + (day + 1 - panel.num_days()) as u64,
            };
            initial_probs(config, TAG_PREDICT_INIT, ord, coins)
        }
    };

    let mut iterations = 0;
    let mut delta;
    loop {
        iterations += 1;
        let snapshot = probs.clone();
        let updates = par::try_map(&order, |&c| -> Result<(usize, f64), EngineError> {
            let member = &ensemble.members[c];
            let row = Array2::from_shape_vec((1, ctx.width()), ctx.row(0, c, &snapshot)).expect("row shape");
            let reduced = member.selector.transform(row.view())?;
            Ok((c, member.model.predict_proba(reduced.view())?[0]))
        })?;
        for (c, p) in updates {
            probs[c] = p;
        }
        delta = l2_distance(&probs, &snapshot);
        if !(delta > config.epsilon && iterations < config.max_iter) {
            break;
        }
    }
    Ok(Prediction {
        day,
        probs,
        iterations,
        delta,
    })
}
