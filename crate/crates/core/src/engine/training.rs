use std::ops::Range;

use ndarray::{Array2, Axis};
use rand::Rng;

use super::config::ProbabilityInit;
use super::ensemble::{CoinModel, TrainedEnsemble, ENSEMBLE_FORMAT_VERSION};
use super::features::FeatureContext;
use super::{EngineConfig, EngineError, TAG_MODEL, TAG_TRAIN_INIT};
use crate::classifiers::{self, fit_selector, Dataset, FeatureSelector};
use crate::panel::{fit_normalizer, Day, FeaturePanel, LabelPanel};
use crate::{par, seed};

#[derive(Debug, Clone, Default)]
pub struct FitOptions {
    /// Order in which coins are visited within a sweep; results must not depend on it.
    pub coin_order: Option<Vec<usize>>,
}

/// Trains one model per coin on label days `train` (panel day indices).
///
/// Sweep `t` builds every coin's rows from the probabilities left by sweep `t - 1`
/// (uniform draws before the first), refits selector and model, then re-predicts all
/// training days. Stops once the largest per-day L2 change is at most `epsilon`, or after
/// `max_iter` sweeps.
pub fn c2p2_fit(
    panel: &FeaturePanel,
    labels: &LabelPanel,
    train: Range<usize>,
    config: &EngineConfig,
) -> Result<TrainedEnsemble, EngineError> {
    c2p2_fit_with(panel, labels, train, config, &FitOptions::default())
}

pub fn c2p2_fit_with(
    panel: &FeaturePanel,
    labels: &LabelPanel,
    train: Range<usize>,
    config: &EngineConfig,
    options: &FitOptions,
) -> Result<TrainedEnsemble, EngineError> {
    config.validate()?;
    if train.is_empty() {
        return Err(EngineError::EmptyTrainRange);
    }
    if train.start < config.lag {
        return Err(EngineError::InsufficientHistory {
            day: train.start,
            lag: config.lag,
        });
    }
    if train.end > panel.num_days() {
        return Err(EngineError::AxisMismatch(format!(
            "training range {train:?} exceeds {} panel days",
            panel.num_days()
        )));
    }
    if labels.coins != panel.coins() || labels.days != panel.days() {
        return Err(EngineError::AxisMismatch("labels and panel disagree".into()));
    }
    let coins = panel.num_coins();
    let order = coin_order(options.coin_order.as_deref(), coins)?;

    let normalizer = fit_normalizer(panel, train.start - config.lag..train.end - 1)?;
    let days: Vec<usize> = train.clone().collect();
    let ctx = FeatureContext::build(panel, &normalizer, &days, config.lag, config.active_kinds())?;
    let width = ctx.width();
    let p_off = ctx.probability_offset();
    let last_day = panel.days()[train.end - 1];

    // Labeled slots per coin.
    let labeled: Vec<Vec<usize>> = (0..coins)
        .map(|c| (0..days.len()).filter(|&s| labels.get(c, days[s]).is_some()).collect())
        .collect();
    if let Some(c) = labeled.iter().position(Vec::is_empty) {
        return Err(EngineError::NoLabels(panel.coins()[c].clone()));
    }

    // Base design matrices with the probability block left at zero.
    let base: Vec<Array2<f64>> = par::map_range(coins, |c| {
        let mut x = Array2::zeros((days.len(), width));
        for (s, mut row) in x.axis_iter_mut(Axis(0)).enumerate() {
            ctx.write_row(s, c, &vec![0.0; coins], row.as_slice_mut().expect("row-major"));
        }
        x
    });
    let targets: Vec<Vec<u8>> = (0..coins)
        .map(|c| labeled[c].iter().map(|&s| labels.get(c, days[s]).unwrap_or(0)).collect())
        .collect();

    let mut probs: Vec<Vec<f64>> = days
        .iter()
        .map(|&d| initial_probs(config, TAG_TRAIN_INIT, day_ordinal(panel.days()[d]), coins))
        .collect();
    let model_seeds: Vec<u64> = panel
        .coins()
        .iter()
        .map(|name| seed::derive(config.seed, &[TAG_MODEL, seed::hash_str(name), day_ordinal(last_day)]))
        .collect();

    let mut selectors: Vec<Option<FeatureSelector>> = vec![None; coins];
    let mut members: Vec<Option<CoinModel>> = vec![None; coins];
    let mut deltas = Vec::new();
    let mut iterations = 0;
    loop {
        iterations += 1;
        let snapshot = probs.clone();
        let refit_selector = iterations == 1 || config.refit_selector_each_iter;
        let fitted = par::try_map(&order, |&c| -> Result<(usize, CoinModel, Vec<f64>), EngineError> {
            let mut x = base[c].clone();
            if coins > 1 {
                for (s, mut row) in x.axis_iter_mut(Axis(0)).enumerate() {
                    let row = row.as_slice_mut().expect("row-major");
                    super::features::write_peer_probs(&snapshot[s], c, &mut row[p_off..]);
                }
            }
            let train_x = x.select(Axis(0), &labeled[c]);
            let data = Dataset::new(train_x, targets[c].clone())?;
            let selector = match (&selectors[c], refit_selector) {
                (Some(sel), false) => sel.clone(),
                _ => fit_selector(config.selector, &data)?,
            };
            let reduced = Dataset::new(selector.transform(data.x.view())?, data.y)?;
            let model = classifiers::fit(&config.model.with_seed(model_seeds[c]), &reduced)?;
            let p = model.predict_proba(selector.transform(x.view())?.view())?;
            Ok((c, CoinModel { selector, model }, p.to_vec()))
        })?;

        for (c, member, p) in fitted {
            for (s, v) in p.into_iter().enumerate() {
                probs[s][c] = v;
            }
            selectors[c] = Some(member.selector.clone());
            members[c] = Some(member);
        }
        let delta = probs
            .iter()
            .zip(&snapshot)
            .map(|(a, b)| l2_distance(a, b))
            .fold(0.0, f64::max);
        deltas.push(delta);
        if delta <= config.epsilon || iterations >= config.max_iter {
            break;
        }
    }

    Ok(TrainedEnsemble {
        format_version: ENSEMBLE_FORMAT_VERSION,
        config_hash: config.hash(),
        config: config.clone(),
        coins: panel.coins().to_vec(),
        panel_width: panel.width(),
        normalizer,
        members: members.into_iter().map(|m| m.expect("every coin fitted")).collect(),
        train_days: days.iter().map(|&d| panel.days()[d]).collect(),
        train_probs: probs,
        iterations,
        deltas,
    })
}

pub(crate) fn coin_order(order: Option<&[usize]>, coins: usize) -> Result<Vec<usize>, EngineError> {
    match order {
        None => Ok((0..coins).collect()),
        Some(o) => {
            let mut sorted = o.to_vec();
            sorted.sort_unstable();
            if sorted != (0..coins).collect::<Vec<_>>() {
                return Err(EngineError::Config("coin order must be a permutation of all coins".into()));
            }
            Ok(o.to_vec())
        }
    }
}

pub(crate) fn day_ordinal(day: Day) -> u64 {
    use chrono::Datelike;
    day.num_days_from_ce() as u64
}

pub(crate) fn initial_probs(config: &EngineConfig, tag: u64, day_ord: u64, coins: usize) -> Vec<f64> {
    let mut rng = seed::rng(seed::derive(config.seed, &[tag, day_ord]));
    match config.init {
        ProbabilityInit::Uniform => (0..coins).map(|_| rng.random::<f64>()).collect(),
        ProbabilityInit::SharedUniform => vec![rng.random::<f64>(); coins],
    }
}

pub(crate) fn l2_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}
