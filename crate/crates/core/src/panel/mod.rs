//! Market data ingest, up/down labels, and aligned per-(coin, day) feature panels.

mod assemble;
mod histogram;
pub mod io;
mod labels;
mod normalize;
mod ohlc;

use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use assemble::{assemble_panel, FeaturePanel, FillPolicy, GroupBlock, GroupLayout};
pub use histogram::histogram_features;
pub use labels::{derive_labels, LabelPanel, LabelSeries};
pub use normalize::{fit_normalizer, Normalizer};
pub use ohlc::{ingest_ohlc, price_block, OhlcSchema, OhlcSeries, PriceColumn};

/// Calendar day at daily resolution.
pub type Day = NaiveDate;

pub(crate) const DATE_FORMAT: &str = "%Y-%m-%d";

/// Feature groups: price history, global economic indicators, and social (Reddit) signals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Group {
    P,
    E,
    R,
}

impl Group {
    pub const ALL: [Group; 3] = [Group::P, Group::E, Group::R];

    pub fn as_str(self) -> &'static str {
        match self {
            Group::P => "P",
            Group::E => "E",
            Group::R => "R",
        }
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Group {
    type Err = PanelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "P" | "p" => Ok(Group::P),
            "E" | "e" => Ok(Group::E),
            "R" | "r" => Ok(Group::R),
            other => Err(PanelError::UnknownGroup(other.to_string())),
        }
    }
}

/// The four next-day prediction tasks, one per OHLC column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    OpenOpen,
    HighHigh,
    LowLow,
    CloseClose,
}

impl Task {
    pub const ALL: [Task; 4] = [Task::OpenOpen, Task::HighHigh, Task::LowLow, Task::CloseClose];

    pub fn as_str(self) -> &'static str {
        match self {
            Task::OpenOpen => "open_open",
            Task::HighHigh => "high_high",
            Task::LowLow => "low_low",
            Task::CloseClose => "close_close",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Task {
    type Err = PanelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Task::ALL
            .into_iter()
            .find(|t| t.as_str() == s.trim())
            .ok_or_else(|| PanelError::UnknownTask(s.to_string()))
    }
}

#[derive(Debug, Error)]
pub enum PanelError {
    #[error("line {line}: {reason}")]
    MalformedRow { line: u64, reason: String },
    #[error("line {line} ({day}): {reason}")]
    OhlcViolation { line: u64, day: Day, reason: String },
    #[error("duplicate day {0}")]
    DuplicateDay(Day),
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("series `{coin}` has {len} day(s), at least 2 are required")]
    TooShort { coin: String, len: usize },
    #[error("histogram edges must number at least two and be strictly increasing")]
    BadEdges,
    #[error("group {group}: expected width {expected}, found {found}")]
    WidthMismatch { group: Group, expected: usize, found: usize },
    #[error("no coin is present in every feature group")]
    EmptyIntersection,
    #[error("empty day range")]
    EmptyRange,
    #[error("unknown feature group `{0}`")]
    UnknownGroup(String),
    #[error("unknown task `{0}`")]
    UnknownTask(String),
    #[error("feature group {0} supplied more than once")]
    DuplicateGroup(Group),
    #[error("manifest: {0}")]
    Manifest(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub(crate) fn parse_day(s: &str) -> Option<Day> {
    NaiveDate::parse_from_str(s.trim(), DATE_FORMAT).ok()
}
