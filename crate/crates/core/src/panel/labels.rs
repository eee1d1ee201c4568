use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{Day, OhlcSeries, PanelError, Task};

/// Up/down labels for one coin and task; `labels[i]` belongs to `days[i]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelSeries {
    pub coin: String,
    pub task: Task,
    pub days: Vec<Day>,
    pub labels: Vec<u8>,
}

/// Labels a day 1 when the task's price strictly exceeds the previous row's. Equal prices are 0.
pub fn derive_labels(series: &OhlcSeries, task: Task) -> Result<LabelSeries, PanelError> {
    if series.len() < 2 {
        return Err(PanelError::TooShort {
            coin: series.coin.clone(),
            len: series.len(),
        });
    }
    let px = series.column(task);
    let labels = px.windows(2).map(|w| u8::from(w[1] > w[0])).collect();
    Ok(LabelSeries {
        coin: series.coin.clone(),
        task,
        days: series.days[1..].to_vec(),
        labels,
    })
}

/// Labels for one task aligned to a panel's coin and day axes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelPanel {
    pub task: Task,
    pub coins: Vec<String>,
    pub days: Vec<Day>,
    /// `labels[coin][day]`; `None` where the price or its predecessor is missing.
    pub labels: Vec<Vec<Option<u8>>>,
}

impl LabelPanel {
    /// Aligns per-coin labels onto the given axes. Every coin must have a series.
    pub fn from_series(
        task: Task,
        coins: &[String],
        days: &[Day],
        series: &[OhlcSeries],
    ) -> Result<Self, PanelError> {
        let by_coin: HashMap<&str, &OhlcSeries> = series.iter().map(|s| (s.coin.as_str(), s)).collect();
        let mut labels = Vec::with_capacity(coins.len());
        for coin in coins {
            let s = by_coin
                .get(coin.as_str())
                .ok_or_else(|| PanelError::Manifest(format!("no price series for coin `{coin}`")))?;
            let ls = derive_labels(s, task)?;
            let lookup: HashMap<Day, u8> = ls.days.iter().copied().zip(ls.labels.iter().copied()).collect();
            labels.push(days.iter().map(|d| lookup.get(d).copied()).collect());
        }
        Ok(Self {
            task,
            coins: coins.to_vec(),
            days: days.to_vec(),
            labels,
        })
    }

    pub fn get(&self, coin: usize, day: usize) -> Option<u8> {
        self.labels[coin][day]
    }
}
