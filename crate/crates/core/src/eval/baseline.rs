use std::collections::BTreeMap;
use std::io::Read;
use std::ops::Range;

use serde::Deserialize;

use super::EvalError;
use crate::panel::{OhlcSeries, Task};

/// Goodness of fit of a next-day close regression on held-out days.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegressionFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    /// Mean squared error over the variance of the actual closes.
    pub nmse: f64,
}

/// Least squares of `close[d]` on `close[d - 1]` over row indices `train`, scored on `test`.
///
/// Both ranges index rows of `series` and must start at 1 or later. On the test rows
/// `r2 = 1 - SSE/SST` and `nmse = SSE/SST`.
pub fn linreg_baseline(series: &OhlcSeries, train: Range<usize>, test: Range<usize>) -> Result<RegressionFit, EvalError> {
    let close = &series.close;
    for (name, r) in [("train", &train), ("test", &test)] {
        if r.start == 0 || r.end > close.len() {
            return Err(EvalError::InsufficientData(format!(
                "{name} rows {r:?} need a previous close within {} rows",
                close.len()
            )));
        }
    }
    if train.len() < 3 {
        return Err(EvalError::InsufficientData(format!(
            "regression needs at least 3 training days, got {}",
            train.len()
        )));
    }
    if test.is_empty() {
        return Err(EvalError::InsufficientData("no test days".into()));
    }
    let n = train.len() as f64;
    let mx = train.clone().map(|d| close[d - 1]).sum::<f64>() / n;
    let my = train.clone().map(|d| close[d]).sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for d in train {
        let dx = close[d - 1] - mx;
        sxy += dx * (close[d] - my);
        sxx += dx * dx;
    }
    if sxx == 0.0 {
        return Err(EvalError::ZeroVariance("training closes"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;

    let m = test.len() as f64;
    let mean_actual = test.clone().map(|d| close[d]).sum::<f64>() / m;
    let (mut sse, mut sst) = (0.0, 0.0);
    for d in test {
        let err = close[d] - (intercept + slope * close[d - 1]);
        sse += err * err;
        sst += (close[d] - mean_actual) * (close[d] - mean_actual);
    }
    if sst == 0.0 {
        return Err(EvalError::ZeroVariance("test closes"));
    }
    let nmse = sse / sst;
    Ok(RegressionFit {
        slope,
        intercept,
        r2: 1.0 - nmse,
        nmse,
    })
}

/// External per-(coin, task) AUCs to compute lift against.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BaselineAucTable {
    entries: BTreeMap<(String, Task), f64>,
}

#[derive(Deserialize)]
struct BaselineRow {
    coin: String,
    task: String,
    auc: f64,
}

impl BaselineAucTable {
    pub fn insert(&mut self, coin: &str, task: Task, auc: f64) -> Result<(), EvalError> {
        if !(auc > 0.0 && auc <= 1.0) {
            return Err(EvalError::BadBaseline(format!("AUC {auc} for {coin}/{task} outside (0, 1]")));
        }
        self.entries.insert((coin.to_string(), task), auc);
        Ok(())
    }

    pub fn get(&self, coin: &str, task: Task) -> Option<f64> {
        self.entries.get(&(coin.to_string(), task)).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Reads `coin,task,auc` rows with a header.
    pub fn read<R: Read>(source: R) -> Result<Self, EvalError> {
        let mut table = Self::default();
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(source);
        for row in reader.deserialize() {
            let row: BaselineRow = row.map_err(|e| EvalError::BadBaseline(e.to_string()))?;
            let task: Task = row.task.parse().map_err(|_| EvalError::BadBaseline(format!("unknown task `{}`", row.task)))?;
            table.insert(&row.coin, task, row.auc)?;
        }
        Ok(table)
    }
}
