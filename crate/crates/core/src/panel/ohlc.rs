use std::collections::BTreeMap;
use std::io::Read;

use serde::{Deserialize, Serialize};

use super::{parse_day, Day, GroupBlock, Group, PanelError, Task};

/// Daily OHLC prices for one asset, sorted by day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OhlcSeries {
    pub coin: String,
    pub days: Vec<Day>,
    pub open: Vec<f64>,
    pub high: Vec<f64>,
    pub low: Vec<f64>,
    pub close: Vec<f64>,
}

impl OhlcSeries {
    pub fn len(&self) -> usize {
        self.days.len()
    }

    pub fn is_empty(&self) -> bool {
        self.days.is_empty()
    }

    /// The price column a task compares day over day.
    pub fn column(&self, task: Task) -> &[f64] {
        match task {
            Task::OpenOpen => &self.open,
            Task::HighHigh => &self.high,
            Task::LowLow => &self.low,
            Task::CloseClose => &self.close,
        }
    }
}

/// Column names for the OHLC delimited-text schema.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct OhlcSchema {
    pub date: String,
    pub open: String,
    pub high: String,
    pub low: String,
    pub close: String,
}

impl Default for OhlcSchema {
    fn default() -> Self {
        Self {
            date: "date".into(),
            open: "open".into(),
            high: "high".into(),
            low: "low".into(),
            close: "close".into(),
        }
    }
}

/// Reads a headered CSV of daily prices into a validated, day-sorted series.
pub fn ingest_ohlc<R: Read>(coin: &str, source: R, schema: &OhlcSchema) -> Result<OhlcSeries, PanelError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(source);
    let headers = reader.headers()?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| PanelError::MissingColumn(name.to_string()))
    };
    let cols = [
        find(&schema.date)?,
        find(&schema.open)?,
        find(&schema.high)?,
        find(&schema.low)?,
        find(&schema.close)?,
    ];

    let mut rows: BTreeMap<Day, [f64; 4]> = BTreeMap::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |i: usize| record.get(cols[i]).unwrap_or("");
        let day = parse_day(field(0)).ok_or_else(|| PanelError::MalformedRow {
            line,
            reason: format!("unparsable date `{}`", field(0)),
        })?;
        let mut px = [0.0; 4];
        for (k, name) in ["open", "high", "low", "close"].iter().enumerate() {
            let raw = field(k + 1);
            px[k] = raw.parse::<f64>().map_err(|_| PanelError::MalformedRow {
                line,
                reason: format!("unparsable {name} `{raw}`"),
            })?;
        }
        check_bounds(line, day, px)?;
        if rows.insert(day, px).is_some() {
            return Err(PanelError::DuplicateDay(day));
        }
    }

    let mut series = OhlcSeries {
        coin: coin.to_string(),
        days: Vec::with_capacity(rows.len()),
        open: Vec::with_capacity(rows.len()),
        high: Vec::with_capacity(rows.len()),
        low: Vec::with_capacity(rows.len()),
        close: Vec::with_capacity(rows.len()),
    };
    for (day, [o, h, l, c]) in rows {
        series.days.push(day);
        series.open.push(o);
        series.high.push(h);
        series.low.push(l);
        series.close.push(c);
    }
    Ok(series)
}

fn check_bounds(line: u64, day: Day, [o, h, l, c]: [f64; 4]) -> Result<(), PanelError> {
    let violation = |reason: String| Err(PanelError::OhlcViolation { line, day, reason });
    if [o, h, l, c].iter().any(|v| !v.is_finite() || *v <= 0.0) {
        return violation("prices must be positive and finite".into());
    }
    if h < l {
        return violation(format!("high {h} < low {l}"));
    }
    if l > o.min(c) {
        return violation(format!("low {l} above min(open, close)"));
    }
    if h < o.max(c) {
        return violation(format!("high {h} below max(open, close)"));
    }
    Ok(())
}

/// Which prices make up the per-day price-history (P) features.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriceColumn {
    #[default]
    Close,
    Open,
    High,
    Low,
    /// All four prices, in open, high, low, close order.
    Ohlc,
}

impl PriceColumn {
    pub fn width(self) -> usize {
        match self {
            PriceColumn::Ohlc => 4,
            _ => 1,
        }
    }
}

/// Builds the P group from price series.
pub fn price_block(series: &[OhlcSeries], column: PriceColumn) -> GroupBlock {
    let mut block = GroupBlock::new(Group::P, column.width());
    for s in series {
        for i in 0..s.len() {
            let values = match column {
                PriceColumn::Close => vec![s.close[i]],
                PriceColumn::Open => vec![s.open[i]],
                PriceColumn::High => vec![s.high[i]],
                PriceColumn::Low => vec![s.low[i]],
                PriceColumn::Ohlc => vec![s.open[i], s.high[i], s.low[i], s.close[i]],
            };
            block.insert(&s.coin, s.days[i], values);
        }
    }
    block
}
