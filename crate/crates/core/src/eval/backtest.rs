use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::report::{pair_tests, PairTest, ScoreRow};
use super::{auc, lift, BaselineAucTable, EvalError};
use crate::classifiers::{ModelSpec, SelectorSpec};
use crate::engine::{c2p2_fit, c2p2_predict, EngineConfig};
use crate::panel::{Day, FeaturePanel, Group, LabelPanel, Task};
use crate::{par, seed};

/// One point of the experiment grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub lag: usize,
    pub model: ModelSpec,
    pub selector: SelectorSpec,
    /// Feature groups kept from the panel.
    pub groups: Vec<Group>,
}

impl GridCell {
    /// Group letters joined by `+`, e.g. `P+E+R`.
    pub fn features_label(&self) -> String {
        self.groups.iter().map(|g| g.as_str()).collect::<Vec<_>>().join("+")
    }

    pub fn label(&self) -> String {
        format!(
            "{}/{}/L{}/{}",
            self.model.kind.label(),
            self.features_label(),
            self.lag,
            self.selector.label()
        )
    }
}

/// Cartesian product in (lag, model, selector, feature set) order.
pub fn build_grid(lags: &[usize], models: &[ModelSpec], selectors: &[SelectorSpec], feature_sets: &[Vec<Group>]) -> Vec<GridCell> {
    let mut cells = Vec::new();
    for &lag in lags {
        for model in models {
            for &selector in selectors {
                for groups in feature_sets {
                    let mut groups = groups.clone();
                    groups.sort();
                    groups.dedup();
                    cells.push(GridCell {
                        lag,
                        model: model.clone(),
                        selector,
                        groups,
                    });
                }
            }
        }
    }
    cells
}

#[derive(Debug, Clone, PartialEq)]
pub struct BacktestConfig {
    /// Labeled days per training window.
    pub train_window: usize,
    /// Scored days at the end of the panel.
    pub test_days: usize,
    pub tasks: Vec<Task>,
    /// Days between refits; in between, the last ensemble keeps predicting.
    pub refit_stride: usize,
    /// Drop the similarity block from every model.
    pub ablate_similarity: bool,
    /// Days right before the test period scored only to pick each coin's cell.
    pub validation_days: Option<usize>,
    /// Template for epsilon, iteration cap, kinds, root seed, and initialization; lag,
    /// model, and selector come from the grid.
    pub engine: EngineConfig,
}

impl Default for BacktestConfig {
    fn default() -> Self {
        Self {
            train_window: 123,
            test_days: 61,
            tasks: vec![Task::CloseClose],
            refit_stride: 1,
            ablate_similarity: false,
            validation_days: None,
            engine: EngineConfig::default(),
        }
    }
}

impl BacktestConfig {
    pub fn validate(&self, grid: &[GridCell]) -> Result<(), EvalError> {
        let bad = |m: String| Err(EvalError::BadConfig(m));
        if grid.is_empty() {
            return bad("empty grid".into());
        }
        if self.tasks.is_empty() {
            return bad("no tasks".into());
        }
        if self.test_days == 0 {
            return bad("test_days must be at least 1".into());
        }
        if self.refit_stride == 0 {
            return bad("refit_stride must be at least 1".into());
        }
        if self.validation_days == Some(0) {
            return bad("validation_days must be at least 1 when set".into());
        }
        for cell in grid {
            if self.train_window < cell.lag + 2 {
                return bad(format!("train_window {} is shorter than lag {} + 2", self.train_window, cell.lag));
            }
            if cell.groups.is_empty() {
                return bad(format!("cell {} keeps no feature groups", cell.label()));
            }
        }
        Ok(())
    }

    /// Engine configuration for one grid cell and task. The seed depends on the cell and
    /// task but not on the ablation flag, so full and ablated runs share their draws.
    pub fn engine_for(&self, cell: &GridCell, task: Task) -> EngineConfig {
        let mut engine = self.engine.clone();
        engine.lag = cell.lag;
        engine.model = cell.model.clone();
        engine.selector = cell.selector;
        engine.use_similarity = engine.use_similarity && !self.ablate_similarity;
        engine.seed = seed::derive(
            self.engine.seed,
            &[seed::hash_str(&cell.label()), seed::hash_str(task.as_str())],
        );
        engine
    }
}

/// Predictions for consecutive days from one fit.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastBlock {
    /// `[day][coin]`.
    pub probs: Vec<Vec<f64>>,
    pub iterations: Vec<usize>,
    pub train_iterations: usize,
}

/// Fits on label days `train` and predicts each of `days` (all at or after `train.end`).
pub trait Forecaster: Sync {
    fn forecast(
        &self,
        panel: &FeaturePanel,
        labels: &LabelPanel,
        train: Range<usize>,
        days: &[usize],
        config: &EngineConfig,
    ) -> Result<ForecastBlock, EvalError>;
}

/// The collective classifier.
#[derive(Debug, Clone, Copy, Default)]
pub struct C2p2Forecaster;

impl Forecaster for C2p2Forecaster {
    fn forecast(
        &self,
        panel: &FeaturePanel,
        labels: &LabelPanel,
        train: Range<usize>,
        days: &[usize],
        config: &EngineConfig,
    ) -> Result<ForecastBlock, EvalError> {
        let ensemble = c2p2_fit(panel, labels, train, config)?;
        let mut probs = Vec::with_capacity(days.len());
        let mut iterations = Vec::with_capacity(days.len());
        for &d in days {
            let p = c2p2_predict(&ensemble, panel, d)?;
            probs.push(p.probs);
            iterations.push(p.iterations);
        }
        Ok(ForecastBlock {
            probs,
            iterations,
            train_iterations: ensemble.iterations,
        })
    }
}

/// Every prediction of one (cell, task) pair over the evaluated days.
#[derive(Debug, Clone, PartialEq)]
pub struct CellPredictions {
    pub cell: usize,
    pub task: Task,
    /// Panel day indices, validation days first.
    pub days: Vec<usize>,
    /// `[day][coin]`.
    pub probs: Vec<Vec<f64>>,
    pub iterations: Vec<usize>,
    pub fits: usize,
    pub train_iterations: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BacktestReport {
    pub coins: Vec<String>,
    pub tasks: Vec<Task>,
    pub grid: Vec<GridCell>,
    pub ablated: bool,
    pub test_days: Vec<Day>,
    pub validation_days: Vec<Day>,
    /// Ordered by (coin, task, cell).
    pub scores: Vec<ScoreRow>,
    pub pair_tests: Vec<PairTest>,
    pub predictions: Vec<CellPredictions>,
}

pub fn rolling_backtest(
    panel: &FeaturePanel,
    labels: &[LabelPanel],
    grid: &[GridCell],
    config: &BacktestConfig,
    baseline: Option<&BaselineAucTable>,
) -> Result<BacktestReport, EvalError> {
    rolling_backtest_with(panel, labels, grid, config, baseline, &C2p2Forecaster)
}

/// Walks forward over the last `validation_days + test_days` panel days. Day `d` is
/// predicted by a model fitted on label days `d' - train_window .. d'`, where `d' <= d` is
/// the most recent refit day, so nothing from day `d` onward reaches the prediction.
pub fn rolling_backtest_with(
    panel: &FeaturePanel,
    labels: &[LabelPanel],
    grid: &[GridCell],
    config: &BacktestConfig,
    baseline: Option<&BaselineAucTable>,
    forecaster: &dyn Forecaster,
) -> Result<BacktestReport, EvalError> {
    config.validate(grid)?;
    let n = panel.num_days();
    let validation = config.validation_days.unwrap_or(0);
    let evaluated = config.test_days + validation;
    let max_lag = grid.iter().map(|c| c.lag).max().expect("nonempty grid");
    let needed = evaluated + config.train_window + max_lag;
    if n < needed {
        return Err(EvalError::InsufficientData(format!(
            "{n} panel days, need {needed} (test + validation + train window + lag)"
        )));
    }
    let task_labels: Vec<&LabelPanel> = config
        .tasks
        .iter()
        .map(|&t| labels.iter().find(|l| l.task == t).ok_or(EvalError::MissingLabels(t)))
        .collect::<Result<_, _>>()?;
    for l in &task_labels {
        if l.coins != panel.coins() || l.days != panel.days() {
            return Err(EvalError::BadConfig(format!("labels for {} are not aligned with the panel", l.task)));
        }
    }

    let first = n - evaluated;
    let blocks: Vec<Range<usize>> = (first..n)
        .step_by(config.refit_stride)
        .map(|s| s..(s + config.refit_stride).min(n))
        .collect();
    let panels: Vec<FeaturePanel> = grid
        .iter()
        .map(|cell| panel.select_groups(&cell.groups))
        .collect::<Result<_, _>>()?;

    let (tasks, nblocks) = (config.tasks.len(), blocks.len());
    let jobs: Vec<(usize, usize, usize)> = (0..grid.len())
        .flat_map(|c| (0..tasks).flat_map(move |t| (0..nblocks).map(move |b| (c, t, b))))
        .collect();
    let outputs = par::try_map(&jobs, |&(c, t, b)| {
        let engine = config.engine_for(&grid[c], config.tasks[t]);
        let block = &blocks[b];
        let days: Vec<usize> = block.clone().collect();
        let out = forecaster.forecast(
            &panels[c],
            task_labels[t],
            block.start - config.train_window..block.start,
            &days,
            &engine,
        )?;
        if out.probs.len() != days.len() || out.probs.iter().any(|p| p.len() != panel.num_coins()) {
            return Err(EvalError::LengthMismatch {
                left: out.probs.len(),
                right: days.len(),
            });
        }
        Ok::<_, EvalError>(out)
    })?;

    // Reduction in (cell, task, block) order.
    let mut predictions = Vec::with_capacity(grid.len() * config.tasks.len());
    let mut outputs = outputs.into_iter();
    for cell in 0..grid.len() {
        for &task in &config.tasks {
            let mut pred = CellPredictions {
                cell,
                task,
                days: (first..n).collect(),
                probs: Vec::with_capacity(evaluated),
                iterations: Vec::with_capacity(evaluated),
                fits: blocks.len(),
                train_iterations: Vec::with_capacity(blocks.len()),
            };
            for _ in 0..blocks.len() {
                let out = outputs.next().expect("one output per job");
                pred.probs.extend(out.probs);
                pred.iterations.extend(out.iterations);
                pred.train_iterations.push(out.train_iterations);
            }
            predictions.push(pred);
        }
    }

    let mut scores = Vec::new();
    for (ci, coin) in panel.coins().iter().enumerate() {
        for (ti, &task) in config.tasks.iter().enumerate() {
            for (cell_idx, cell) in grid.iter().enumerate() {
                let pred = &predictions[cell_idx * config.tasks.len() + ti];
                let score = |range: Range<usize>| -> Option<f64> {
                    let (mut s, mut y) = (Vec::new(), Vec::new());
                    for k in range {
                        if let Some(label) = task_labels[ti].get(ci, pred.days[k]) {
                            s.push(pred.probs[k][ci]);
                            y.push(label);
                        }
                    }
                    auc(&s, &y).ok()
                };
                let test_auc = score(validation..evaluated);
                let baseline_auc = baseline.and_then(|b| b.get(coin, task));
                let test_iters = &pred.iterations[validation..];
                scores.push(ScoreRow {
                    coin: coin.clone(),
                    task,
                    cell: cell_idx,
                    classifier: cell.model.kind.label().to_string(),
                    features: cell.features_label(),
                    lag: cell.lag,
                    selector: cell.selector.label(),
                    similarity: !config.ablate_similarity && config.engine.use_similarity,
                    auc: test_auc,
                    validation_auc: if validation > 0 { score(0..validation) } else { None },
                    baseline_auc,
                    lift: match (test_auc, baseline_auc) {
                        (Some(a), Some(b)) => lift(a, b).ok(),
                        _ => None,
                    },
                    fits: pred.fits,
                    prediction_days: config.test_days,
                    mean_iterations: test_iters.iter().sum::<usize>() as f64 / test_iters.len() as f64,
                    max_iterations: test_iters.iter().copied().max().unwrap_or(0),
                    best_on_test: false,
                    best_on_validation: false,
                });
            }
        }
    }
    mark_best(&mut scores, grid.len());
    let pair_tests = pair_tests(&scores, &config.tasks, grid.len());
    Ok(BacktestReport {
        coins: panel.coins().to_vec(),
        tasks: config.tasks.clone(),
        grid: grid.to_vec(),
        ablated: config.ablate_similarity,
        test_days: panel.days()[n - config.test_days..].to_vec(),
        validation_days: panel.days()[first..n - config.test_days].to_vec(),
        scores,
        pair_tests,
        predictions,
    })
}

/// Flags the highest-AUC cell in each consecutive run of `cells` rows (one coin and task);
/// ties go to the earlier cell.
fn mark_best(scores: &mut [ScoreRow], cells: usize) {
    fn argmax(rows: &[ScoreRow], key: impl Fn(&ScoreRow) -> Option<f64>) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (i, r) in rows.iter().enumerate() {
            if let Some(v) = key(r) {
                if best.is_none_or(|(_, b)| v > b) {
                    best = Some((i, v));
                }
            }
        }
        best.map(|b| b.0)
    }
    for group in scores.chunks_mut(cells) {
        if let Some(i) = argmax(group, |r| r.auc) {
            group[i].best_on_test = true;
        }
        if let Some(i) = argmax(group, |r| r.validation_auc) {
            group[i].best_on_validation = true;
        }
    }
}

impl BacktestReport {
    /// Rows flagged best-on-test, one per (coin, task) with a defined AUC.
    pub fn best_on_test(&self) -> impl Iterator<Item = &ScoreRow> {
        self.scores.iter().filter(|r| r.best_on_test)
    }

    pub fn best_on_validation(&self) -> impl Iterator<Item = &ScoreRow> {
        self.scores.iter().filter(|r| r.best_on_validation)
    }

    pub fn score(&self, coin: &str, task: Task, cell: usize) -> Option<&ScoreRow> {
        self.scores
            .iter()
            .find(|r| r.coin == coin && r.task == task && r.cell == cell)
    }

    pub fn write_csv<W: std::io::Write>(&self, sink: W) -> Result<(), EvalError> {
        super::report::write_score_rows(&self.scores, sink)
    }

    pub fn to_markdown(&self) -> String {
        super::report::render_markdown(self)
    }
}
