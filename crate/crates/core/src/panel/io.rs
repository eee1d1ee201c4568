//! Delimited-text feature ingest, the group manifest, and panel directories.

use std::collections::BTreeMap;
use std::fs;
use std::io::{Read, Write};
use std::ops::Range;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{
    assemble_panel, parse_day, Day, FeaturePanel, FillPolicy, Group, GroupBlock, LabelPanel, PanelError,
    DATE_FORMAT,
};

/// Maps column ranges of feature files onto groups.
///
/// ```toml
/// [[group]]
/// name = "E"
/// file = "features.csv"
/// columns = [0, 88]   # half-open, counted after the `date,coin` columns
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupManifest {
    #[serde(rename = "group")]
    pub groups: Vec<GroupEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupEntry {
    pub name: Group,
    /// Relative paths resolve against the manifest's directory.
    pub file: PathBuf,
    pub columns: [usize; 2],
}

impl GroupManifest {
    pub fn load(path: &Path) -> Result<Self, PanelError> {
        let text = fs::read_to_string(path)?;
        let manifest: GroupManifest = toml::from_str(&text).map_err(|e| PanelError::Manifest(e.to_string()))?;
        for g in &manifest.groups {
            if g.columns[0] >= g.columns[1] {
                return Err(PanelError::Manifest(format!(
                    "group {} has empty column range {:?}",
                    g.name, g.columns
                )));
            }
        }
        Ok(manifest)
    }

    /// Reads every referenced file once and slices it into group blocks.
    pub fn load_blocks(&self, base: &Path) -> Result<Vec<GroupBlock>, PanelError> {
        let mut by_file: BTreeMap<&Path, Vec<(Group, Range<usize>)>> = BTreeMap::new();
        for g in &self.groups {
            by_file
                .entry(g.file.as_path())
                .or_default()
                .push((g.name, g.columns[0]..g.columns[1]));
        }
        let mut blocks = Vec::new();
        for (file, ranges) in by_file {
            let path = if file.is_absolute() { file.to_path_buf() } else { base.join(file) };
            blocks.extend(ingest_features(fs::File::open(&path)?, &ranges)?);
        }
        Ok(blocks)
    }
}

/// Reads a `date,coin,<features...>` file, slicing feature columns into groups.
pub fn ingest_features<R: Read>(source: R, ranges: &[(Group, Range<usize>)]) -> Result<Vec<GroupBlock>, PanelError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(source);
    let headers = reader.headers()?.clone();
    if headers.get(0) != Some("date") || headers.get(1) != Some("coin") {
        return Err(PanelError::MissingColumn("date,coin".into()));
    }
    let n_features = headers.len() - 2;
    if let Some((g, r)) = ranges.iter().find(|(_, r)| r.end > n_features) {
        return Err(PanelError::Manifest(format!(
            "group {g} range {r:?} exceeds {n_features} feature columns"
        )));
    }
    let mut blocks: Vec<GroupBlock> = ranges.iter().map(|(g, r)| GroupBlock::new(*g, r.len())).collect();
    let mut row = vec![0.0; n_features];
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let day = parse_day(&record[0]).ok_or_else(|| PanelError::MalformedRow {
            line,
            reason: format!("unparsable date `{}`", &record[0]),
        })?;
        let coin = &record[1];
        for (j, slot) in row.iter_mut().enumerate() {
            let raw = record.get(j + 2).unwrap_or("");
            *slot = raw.parse().map_err(|_| PanelError::MalformedRow {
                line,
                reason: format!("unparsable value `{raw}` in column {}", j + 2),
            })?;
        }
        for (block, (_, r)) in blocks.iter_mut().zip(ranges) {
            block.insert(coin, day, row[r.clone()].to_vec());
        }
    }
    Ok(blocks)
}

/// Descriptor written next to a serialized panel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelManifest {
    pub format_version: u32,
    pub groups: Vec<(Group, usize)>,
    pub coins: Vec<String>,
    pub first_day: String,
    pub last_day: String,
    pub num_days: usize,
    pub fill_policy: FillPolicy,
}

pub const PANEL_FORMAT_VERSION: u32 = 1;

/// Writes `<G>.csv` per group plus `manifest.json`.
pub fn write_panel_dir(panel: &FeaturePanel, dir: &Path) -> Result<(), PanelError> {
    fs::create_dir_all(dir)?;
    for g in panel.groups() {
        let mut w = csv::Writer::from_path(dir.join(format!("{}.csv", g.group)))?;
        let mut header = vec!["date".to_string(), "coin".to_string()];
        header.extend((0..g.width).map(|j| format!("f{j}")));
        w.write_record(&header)?;
        for (c, coin) in panel.coins().iter().enumerate() {
            for (d, day) in panel.days().iter().enumerate() {
                let mut rec = vec![day.format(DATE_FORMAT).to_string(), coin.clone()];
                rec.extend(panel.row(c, d)[g.offset..g.offset + g.width].iter().map(f64::to_string));
                w.write_record(&rec)?;
            }
        }
        w.flush()?;
    }
    let manifest = PanelManifest {
        format_version: PANEL_FORMAT_VERSION,
        groups: panel.groups().iter().map(|g| (g.group, g.width)).collect(),
        coins: panel.coins().to_vec(),
        first_day: fmt_day(panel.days().first()),
        last_day: fmt_day(panel.days().last()),
        num_days: panel.num_days(),
        fill_policy: panel.fill_policy(),
    };
    let json = serde_json::to_string_pretty(&manifest).map_err(|e| PanelError::Manifest(e.to_string()))?;
    fs::write(dir.join("manifest.json"), json + "\n")?;
    Ok(())
}

fn fmt_day(d: Option<&Day>) -> String {
    d.map(|d| d.format(DATE_FORMAT).to_string()).unwrap_or_default()
}

pub fn read_panel_dir(dir: &Path) -> Result<FeaturePanel, PanelError> {
    let text = fs::read_to_string(dir.join("manifest.json"))?;
    let manifest: PanelManifest = serde_json::from_str(&text).map_err(|e| PanelError::Manifest(e.to_string()))?;
    if manifest.format_version != PANEL_FORMAT_VERSION {
        return Err(PanelError::Manifest(format!(
            "unsupported panel format version {}",
            manifest.format_version
        )));
    }
    let mut blocks = Vec::new();
    for &(g, w) in &manifest.groups {
        let file = fs::File::open(dir.join(format!("{g}.csv")))?;
        blocks.extend(ingest_features(file, &[(g, 0..w)])?);
    }
    let panel = assemble_panel(&blocks, manifest.fill_policy)?;
    if panel.num_days() != manifest.num_days {
        return Err(PanelError::Manifest("day count differs from manifest".into()));
    }
    panel.with_coin_order(&manifest.coins)
}

/// Writes `date,coin,task,label` rows for every defined label.
pub fn write_labels_csv<W: Write>(labels: &[LabelPanel], sink: W) -> Result<(), PanelError> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["date", "coin", "task", "label"])?;
    for lp in labels {
        for (c, coin) in lp.coins.iter().enumerate() {
            for (d, day) in lp.days.iter().enumerate() {
                if let Some(y) = lp.get(c, d) {
                    w.write_record([
                        day.format(DATE_FORMAT).to_string(),
                        coin.clone(),
                        lp.task.to_string(),
                        y.to_string(),
                    ])?;
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}
