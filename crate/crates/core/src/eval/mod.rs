//! Rolling-window backtests, ranking metrics, significance tests, and synthetic markets.

mod backtest;
mod baseline;
mod metrics;
mod report;
mod synthetic;

use thiserror::Error;

use crate::engine::EngineError;
use crate::panel::{PanelError, Task};

pub use backtest::{
    build_grid, rolling_backtest, rolling_backtest_with, BacktestConfig, BacktestReport, C2p2Forecaster, CellPredictions,
    ForecastBlock, Forecaster, GridCell,
};
pub use baseline::{linreg_baseline, BaselineAucTable, RegressionFit};
pub use metrics::{auc, lift, paired_t_test};
pub use report::{comparison_markdown, compare_runs, read_score_rows, write_comparison_csv, ComparisonRow, PairTest, ScoreRow};
pub use synthetic::{default_coin_names, generate_synthetic_market, SyntheticMarket, SyntheticSpec};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("non-finite {0} value")]
    NonFinite(&'static str),
    #[error("AUC needs both classes")]
    SingleClass,
    #[error("baseline AUC must be positive")]
    ZeroBaseline,
    #[error("paired differences are constant and nonzero; t is undefined")]
    DegenerateVariance,
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("zero variance in {0}")]
    ZeroVariance(&'static str),
    #[error("baseline table: {0}")]
    BadBaseline(String),
    #[error("synthetic market: {0}")]
    BadSpec(String),
    #[error("backtest configuration: {0}")]
    BadConfig(String),
    #[error("no labels for task {0}")]
    MissingLabels(Task),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Panel(#[from] PanelError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
