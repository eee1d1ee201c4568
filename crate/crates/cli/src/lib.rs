//! Configuration-driven runner: synthetic data, ingest, backtests, and reports.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;

use std::fs;
use std::path::{Path, PathBuf};

use c2p2::eval::{self, BacktestReport, BaselineAucTable, ScoreRow, SyntheticMarket};
use c2p2::panel::io::{read_panel_dir, write_labels_csv, write_panel_dir, GroupEntry, GroupManifest};
use c2p2::panel::{assemble_panel, ingest_ohlc, price_block, FeaturePanel, LabelPanel, OhlcSchema, OhlcSeries};
use serde::Serialize;
use serde_json::json;
use thiserror::Error;

pub use config::{parse_config, parse_config_str, ExperimentConfig, Overrides};
use config::hex_digest;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    /// Write a synthetic market to the configured data paths.
    Generate,
    /// Assemble the feature panel and labels from the data paths.
    Ingest,
    /// Rolling-window backtest over the configured grid.
    Backtest,
    /// The backtest with similarity features removed.
    Ablate,
    /// Compare the backtest and ablate runs of this config.
    Report,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::Generate => "generate",
            Command::Ingest => "ingest",
            Command::Backtest => "backtest",
            Command::Ablate => "ablate",
            Command::Report => "report",
        }
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot parse config: {0}")]
    Parse(String),
    #[error("invalid config: {}", .0.join("; "))]
    Validation(Vec<String>),
    #[error("missing artifact {}", .0.display())]
    MissingArtifact(PathBuf),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) | CliError::Validation(_) => 1,
            CliError::MissingArtifact(_) | CliError::Runtime(_) => 2,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Parse(_) => "ParseError",
            CliError::Validation(_) => "ValidationError",
            CliError::MissingArtifact(_) => "MissingArtifact",
            CliError::Runtime(_) => "RuntimeError",
        }
    }

    /// One-line JSON error record for stderr.
    pub fn record(&self) -> String {
        let messages = match self {
            CliError::Validation(m) => m.clone(),
            other => vec![other.to_string()],
        };
        json!({ "error": self.kind(), "exit_code": self.exit_code(), "messages": messages }).to_string()
    }
}

macro_rules! runtime_from {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Runtime(e.to_string())
            }
        }
    )*};
}
runtime_from!(
    std::io::Error,
    c2p2::panel::PanelError,
    c2p2::eval::EvalError,
    c2p2::engine::EngineError,
    serde_json::Error,
    toml::ser::Error
);

/// Files a run wrote, relative to the output directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOutcome {
    pub run_id: String,
    pub run_dir: PathBuf,
    pub written: Vec<PathBuf>,
}

#[derive(Serialize)]
struct FileDigest {
    path: String,
    sha256: String,
}

#[derive(Serialize)]
struct RunManifest<'a> {
    command: &'a str,
    run_id: &'a str,
    crate_version: &'a str,
    config_hash: String,
    root_seed: u64,
    synthetic_seed: Option<u64>,
    config: &'a ExperimentConfig,
    inputs: Vec<FileDigest>,
    outputs: Vec<FileDigest>,
}

pub fn run(command: Command, config: &ExperimentConfig) -> Result<RunOutcome, CliError> {
    config.check_inputs(command)?;
    let run_id = config.run_id(command);
    let run_dir = config.output_dir.join(&run_id);
    let mut inputs = Vec::new();
    let mut outputs = Vec::new();
    match command {
        Command::Generate => {
            let market = eval::generate_synthetic_market(&config.synthetic_spec())?;
            outputs.extend(write_dataset(config, &market)?);
        }
        Command::Ingest => {
            let (panel, series) = load_raw(config, &mut inputs)?;
            let labels = label_panels(config, &panel, &series)?;
            let dir = config.resolve(config.data.panel_dir.as_deref().unwrap_or(Path::new("panel")));
            let dir = if config.data.panel_dir.is_some() { dir } else { run_dir.join("panel") };
            write_panel_dir(&panel, &dir)?;
            let mut sink = Vec::new();
            write_labels_csv(&labels, &mut sink)?;
            fs::write(dir.join("labels.csv"), sink)?;
            outputs.extend(list_files(&dir)?);
        }
        Command::Backtest | Command::Ablate => {
            let (panel, series) = match &config.data.panel_dir {
                Some(dir) => {
                    let dir = config.resolve(dir);
                    if !dir.join("manifest.json").is_file() {
                        return Err(CliError::MissingArtifact(dir.join("manifest.json")));
                    }
                    inputs.extend(list_files(&dir)?);
                    let panel = read_panel_dir(&dir)?;
                    (panel, read_ohlc(config, &mut inputs)?)
                }
                None => load_raw(config, &mut inputs)?,
            };
            let labels = label_panels(config, &panel, &series)?;
            let baseline = match &config.data.baseline {
                Some(p) => {
                    let p = config.resolve(p);
                    inputs.push(p.clone());
                    Some(BaselineAucTable::read(fs::File::open(&p)?)?)
                }
                None => None,
            };
            let report = eval::rolling_backtest(
                &panel,
                &labels,
                &config.grid(),
                &config.backtest_config(command == Command::Ablate),
                baseline.as_ref(),
            )?;
            outputs.extend(write_report(&run_dir, &report)?);
        }
        Command::Report => {
            let full = read_scores(&config.output_dir.join(config.run_id(Command::Backtest)).join("report.csv"))?;
            let ablated = read_scores(&config.output_dir.join(config.run_id(Command::Ablate)).join("report.csv"))?;
            inputs.push(full.0);
            inputs.push(ablated.0);
            let rows = eval::compare_runs(&full.1, &ablated.1)?;
            fs::create_dir_all(&run_dir)?;
            let mut csv = Vec::new();
            eval::write_comparison_csv(&rows, &mut csv)?;
            outputs.push(write_file(&run_dir.join("report.csv"), &csv)?);
            outputs.push(write_file(&run_dir.join("report.md"), eval::comparison_markdown(&rows).as_bytes())?);
        }
    }

    fs::create_dir_all(&run_dir)?;
    let manifest = RunManifest {
        command: command.as_str(),
        run_id: &run_id,
        crate_version: env!("CARGO_PKG_VERSION"),
        config_hash: config.hash(),
        root_seed: config.engine.seed,
        synthetic_seed: (command == Command::Generate).then(|| config.synthetic_seed()),
        config,
        inputs: digests(&inputs, &config.base_dir)?,
        outputs: digests(&outputs, &config.base_dir)?,
    };
    let manifest_path = run_dir.join("manifest");
    fs::write(&manifest_path, serde_json::to_string_pretty(&manifest)? + "\n")?;
    outputs.push(manifest_path);
    Ok(RunOutcome {
        run_id,
        run_dir,
        written: outputs,
    })
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<PathBuf, CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, bytes)?;
    Ok(path.to_path_buf())
}

fn list_files(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)?
        .map(|e| e.map(|e| e.path()))
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .filter(|p| p.is_file())
        .collect();
    files.sort();
    Ok(files)
}

fn digests(paths: &[PathBuf], base: &Path) -> Result<Vec<FileDigest>, CliError> {
    paths
        .iter()
        .map(|p| {
            Ok(FileDigest {
                path: p.strip_prefix(base).unwrap_or(p).display().to_string(),
                sha256: hex_digest(&fs::read(p)?),
            })
        })
        .collect()
}

fn read_scores(path: &Path) -> Result<(PathBuf, Vec<ScoreRow>), CliError> {
    if !path.is_file() {
        return Err(CliError::MissingArtifact(path.to_path_buf()));
    }
    Ok((path.to_path_buf(), eval::read_score_rows(fs::File::open(path)?)?))
}

/// Writes per-coin OHLC files, one feature file holding E and R, and its group manifest.
fn write_dataset(config: &ExperimentConfig, market: &SyntheticMarket) -> Result<Vec<PathBuf>, CliError> {
    let mut written = Vec::new();
    let ohlc_dir = config.resolve(&config.data.ohlc_dir);
    for s in &market.series {
        let mut text = String::from("date,open,high,low,close\n");
        for i in 0..s.len() {
            text.push_str(&format!("{},{},{},{},{}\n", s.days[i], s.open[i], s.high[i], s.low[i], s.close[i]));
        }
        written.push(write_file(&ohlc_dir.join(format!("{}.csv", s.coin)), text.as_bytes())?);
    }

    let manifest_path = config.resolve(&config.data.group_manifest);
    let feature_path = manifest_path.with_file_name("features.csv");
    let panel = &market.panel;
    let layouts: Vec<_> = panel.groups().iter().filter(|g| g.group != c2p2::Group::P).collect();
    let mut text = String::from("date,coin");
    let mut entries = Vec::new();
    let mut col = 0;
    for g in &layouts {
        for j in 0..g.width {
            text.push_str(&format!(",{}{j}", g.group));
        }
        entries.push(GroupEntry {
            name: g.group,
            file: PathBuf::from("features.csv"),
            columns: [col, col + g.width],
        });
        col += g.width;
    }
    text.push('\n');
    for d in 0..panel.num_days() {
        for (c, coin) in panel.coins().iter().enumerate() {
            text.push_str(&format!("{},{coin}", panel.days()[d]));
            for g in &layouts {
                for v in &panel.row(c, d)[g.offset..g.offset + g.width] {
                    text.push_str(&format!(",{v}"));
                }
            }
            text.push('\n');
        }
    }
    written.push(write_file(&feature_path, text.as_bytes())?);
    let manifest = toml::to_string(&GroupManifest { groups: entries })?;
    written.push(write_file(&manifest_path, manifest.as_bytes())?);
    Ok(written)
}

fn read_ohlc(config: &ExperimentConfig, inputs: &mut Vec<PathBuf>) -> Result<Vec<OhlcSeries>, CliError> {
    let dir = config.resolve(&config.data.ohlc_dir);
    config
        .data
        .coins
        .iter()
        .map(|coin| {
            let path = dir.join(format!("{coin}.csv"));
            inputs.push(path.clone());
            Ok(ingest_ohlc(coin, fs::File::open(&path)?, &OhlcSchema::default())?)
        })
        .collect()
}

fn load_raw(config: &ExperimentConfig, inputs: &mut Vec<PathBuf>) -> Result<(FeaturePanel, Vec<OhlcSeries>), CliError> {
    let series = read_ohlc(config, inputs)?;
    let manifest_path = config.resolve(&config.data.group_manifest);
    let manifest = GroupManifest::load(&manifest_path)?;
    inputs.push(manifest_path.clone());
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    let mut files: Vec<PathBuf> = manifest
        .groups
        .iter()
        .map(|g| if g.file.is_absolute() { g.file.clone() } else { base.join(&g.file) })
        .collect();
    files.sort();
    files.dedup();
    inputs.extend(files);
    let mut blocks = manifest.load_blocks(base)?;
    if let Some(column) = config.data.price_feature {
        blocks.push(price_block(&series, column));
    }
    let panel = assemble_panel(&blocks, config.data.fill_policy)?.with_coin_order(&config.data.coins)?;
    Ok((panel, series))
}

fn label_panels(config: &ExperimentConfig, panel: &FeaturePanel, series: &[OhlcSeries]) -> Result<Vec<LabelPanel>, CliError> {
    config
        .data
        .tasks
        .iter()
        .map(|&t| Ok(LabelPanel::from_series(t, panel.coins(), panel.days(), series)?))
        .collect()
}

fn write_report(dir: &Path, report: &BacktestReport) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(dir)?;
    let mut csv = Vec::new();
    report.write_csv(&mut csv)?;
    Ok(vec![
        write_file(&dir.join("report.csv"), &csv)?,
        write_file(&dir.join("report.md"), report.to_markdown().as_bytes())?,
    ])
}

/// Sizes the global worker pool; a no-op without the `parallel` feature.
pub fn set_threads(threads: usize) -> Result<(), CliError> {
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    #[cfg(not(feature = "parallel"))]
    let _ = threads;
    Ok(())
}
