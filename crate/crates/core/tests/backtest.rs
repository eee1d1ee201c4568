use std::ops::Range;

use c2p2::engine::EngineConfig;
use c2p2::eval::{
    build_grid, rolling_backtest, rolling_backtest_with, BacktestConfig, BaselineAucTable, EvalError, ForecastBlock,
    Forecaster, GridCell, SyntheticMarket, SyntheticSpec, generate_synthetic_market,
};
use c2p2::panel::{FeaturePanel, Group, LabelPanel, Task};
use c2p2::{ModelKind, ModelSpec, SelectorSpec};
use rand::{Rng, SeedableRng};

fn market(coins: usize, days: usize, seed: u64) -> SyntheticMarket {
    generate_synthetic_market(&SyntheticSpec::new(coins, days, 0.7, seed)).unwrap()
}

fn lr_grid(lags: &[usize]) -> Vec<GridCell> {
    build_grid(lags, &[ModelSpec::new(ModelKind::lr())], &[SelectorSpec::None], &[Group::ALL.to_vec()])
}

fn small_config(train_window: usize, test_days: usize) -> BacktestConfig {
    BacktestConfig {
        train_window,
        test_days,
        engine: EngineConfig {
            max_iter: 4,
            ..EngineConfig::default()
        },
        ..BacktestConfig::default()
    }
}

/// Scores each day with its own label plus noise far below one.
struct Oracle;

impl Forecaster for Oracle {
    fn forecast(
        &self,
        panel: &FeaturePanel,
        labels: &LabelPanel,
        _train: Range<usize>,
        days: &[usize],
        config: &EngineConfig,
    ) -> Result<ForecastBlock, EvalError> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(config.seed ^ days[0] as u64);
        let probs = days
            .iter()
            .map(|&d| {
                (0..panel.num_coins())
                    .map(|c| labels.get(c, d).unwrap_or(0) as f64 * 0.9 + 0.01 * rng.random::<f64>())
                    .collect()
            })
            .collect();
        Ok(ForecastBlock {
            probs,
            iterations: vec![1; days.len()],
            train_iterations: 1,
        })
    }
}

#[test]
fn one_fit_per_test_day() {
    let m = market(2, 190, 1);
    let config = BacktestConfig {
        engine: EngineConfig {
            max_iter: 3,
            ..EngineConfig::default()
        },
        ..BacktestConfig::default()
    };
    assert_eq!((config.train_window, config.test_days, config.refit_stride), (123, 61, 1));
    let report = rolling_backtest(&m.panel, &m.labels, &lr_grid(&[1]), &config, None).unwrap();
    assert_eq!(report.test_days.len(), 61);
    assert_eq!(report.scores.len(), 2);
    for row in &report.scores {
        assert_eq!((row.fits, row.prediction_days), (61, 61));
        let auc = row.auc.unwrap();
        assert!((0.0..=1.0).contains(&auc));
        assert!(row.max_iterations <= 3);
    }
    assert_eq!(report.predictions[0].train_iterations.len(), 61);
}

#[test]
fn oracle_forecaster_scores_perfectly() {
    let m = market(4, 80, 2);
    let config = BacktestConfig {
        tasks: Task::ALL.to_vec(),
        ..small_config(30, 40)
    };
    let report = rolling_backtest_with(&m.panel, &m.labels, &lr_grid(&[1, 2]), &config, None, &Oracle).unwrap();
    assert_eq!(report.scores.len(), 4 * 4 * 2);
    for row in &report.scores {
        assert_eq!(row.auc, Some(1.0), "{} {}", row.coin, row.task);
    }
    // Rows ordered by coin, then task, then cell.
    let keys: Vec<_> = report.scores.iter().map(|r| (r.coin.clone(), r.task, r.cell)).collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
}

#[test]
fn future_features_never_reach_earlier_predictions() {
    let m = market(3, 70, 3);
    for stride in [1, 4] {
        let config = BacktestConfig {
            refit_stride: stride,
            ..small_config(30, 12)
        };
        let grid = lr_grid(&[2]);
        let base = rolling_backtest(&m.panel, &m.labels, &grid, &config, None).unwrap();
        let pred = &base.predictions[0];
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(stride as u64);
        for _ in 0..5 {
            let k = rng.random_range(0..pred.days.len());
            let d = pred.days[k];
            let mut panel = m.panel.clone();
            let c = rng.random_range(0..panel.num_coins());
            let f = rng.random_range(0..panel.width());
            panel.row_mut(c, d)[f] += 10.0 * rng.random::<f64>() + 1.0;
            let other = rolling_backtest(&panel, &m.labels, &grid, &config, None).unwrap();
            let p2 = &other.predictions[0];
            assert_eq!(pred.probs[..=k], p2.probs[..=k], "stride {stride}, day {d}");
            if k + 1 < pred.days.len() {
                assert_ne!(pred.probs[k + 1..], p2.probs[k + 1..]);
            }
        }
    }
}

#[test]
fn stride_controls_refits() {
    let m = market(2, 60, 4);
    let config = BacktestConfig {
        refit_stride: 4,
        ..small_config(25, 10)
    };
    let report = rolling_backtest(&m.panel, &m.labels, &lr_grid(&[1]), &config, None).unwrap();
    assert!(report.scores.iter().all(|r| r.fits == 3 && r.prediction_days == 10));
}

#[test]
fn validation_days_select_separately() {
    let m = market(3, 90, 5);
    let grid = build_grid(
        &[1, 3],
        &[ModelSpec::new(ModelKind::lr()), ModelSpec::new(ModelKind::gnb())],
        &[SelectorSpec::None],
        &[Group::ALL.to_vec()],
    );
    let config = BacktestConfig {
        validation_days: Some(10),
        refit_stride: 5,
        ..small_config(30, 15)
    };
    let report = rolling_backtest(&m.panel, &m.labels, &grid, &config, None).unwrap();
    assert_eq!(report.validation_days.len(), 10);
    assert_eq!(report.test_days.len(), 15);
    assert_eq!(report.best_on_test().count(), 3);
    assert_eq!(report.best_on_validation().count(), 3);
    for coin in &report.coins {
        let rows: Vec<_> = report.scores.iter().filter(|r| &r.coin == coin).collect();
        let best = rows.iter().find(|r| r.best_on_test).unwrap();
        assert!(rows.iter().all(|r| r.auc <= best.auc));
        assert!(rows.iter().all(|r| r.validation_auc.is_some()));
    }
    assert_eq!(report.pair_tests.len(), 6);
    let md = report.to_markdown();
    assert!(md.contains("best-on-test"));
    assert!(md.contains("chosen on validation"));
}

#[test]
fn lift_against_baseline_table() {
    let m = market(2, 60, 6);
    let mut table = BaselineAucTable::default();
    table.insert("coin00", Task::CloseClose, 0.5).unwrap();
    let report = rolling_backtest(&m.panel, &m.labels, &lr_grid(&[1]), &small_config(25, 20), Some(&table)).unwrap();
    let r0 = report.score("coin00", Task::CloseClose, 0).unwrap();
    assert_eq!(r0.lift, Some(r0.auc.unwrap() / 0.5));
    assert_eq!(report.score("coin01", Task::CloseClose, 0).unwrap().lift, None);
}

#[test]
fn ablation_drops_similarity_only() {
    let m = market(3, 60, 7);
    let grid = lr_grid(&[2]);
    let mut config = small_config(25, 10);
    let full = config.engine_for(&grid[0], Task::CloseClose);
    config.ablate_similarity = true;
    let ablated = config.engine_for(&grid[0], Task::CloseClose);
    assert!(full.use_similarity && !ablated.use_similarity);
    assert_eq!(full.seed, ablated.seed);
    let report = rolling_backtest(&m.panel, &m.labels, &grid, &config, None).unwrap();
    assert!(report.ablated && report.scores.iter().all(|r| !r.similarity));
    assert!(report.to_markdown().contains("Similarity features: off"));
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let m = market(3, 60, 8);
    let grid = build_grid(
        &[1],
        &[ModelSpec::new(ModelKind::rf()), ModelSpec::new(ModelKind::lsvm())],
        &[SelectorSpec::Anova { k: 6 }],
        &[vec![Group::E, Group::R], Group::ALL.to_vec()],
    );
    let config = BacktestConfig {
        refit_stride: 5,
        ..small_config(25, 10)
    };
    let run = || {
        let r = rolling_backtest(&m.panel, &m.labels, &grid, &config, None).unwrap();
        let mut csv = Vec::new();
        r.write_csv(&mut csv).unwrap();
        (csv, r.to_markdown())
    };
    assert_eq!(run(), run());
}

#[test]
fn rejects_short_panels_and_bad_configs() {
    let m = market(2, 40, 9);
    let grid = lr_grid(&[1]);
    assert!(matches!(
        rolling_backtest(&m.panel, &m.labels, &grid, &small_config(30, 10), None),
        Err(EvalError::InsufficientData(_))
    ));
    for bad in [
        BacktestConfig { refit_stride: 0, ..small_config(20, 5) },
        BacktestConfig { test_days: 0, ..small_config(20, 5) },
        BacktestConfig { tasks: vec![], ..small_config(20, 5) },
        small_config(2, 5),
    ] {
        assert!(matches!(
            rolling_backtest(&m.panel, &m.labels, &grid, &bad, None),
            Err(EvalError::BadConfig(_))
        ));
    }
    let only_close: Vec<_> = m.labels.iter().filter(|l| l.task == Task::CloseClose).cloned().collect();
    let config = BacktestConfig {
        tasks: vec![Task::OpenOpen],
        ..small_config(20, 5)
    };
    assert!(matches!(
        rolling_backtest(&m.panel, &only_close, &grid, &config, None),
        Err(EvalError::MissingLabels(Task::OpenOpen))
    ));
}
