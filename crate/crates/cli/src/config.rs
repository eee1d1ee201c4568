//! Experiment configuration files.
//!
//! ```toml
//! [data]
//! ohlc_dir = "data/ohlc"            # one `<coin>.csv` per coin
//! group_manifest = "data/groups.toml"
//! coins = ["BTC", "ETH"]
//! tasks = ["close_close"]
//!
//! [engine]
//! lags = [1, 7]
//! models = ["lr", { kind = "rf", trees = 50 }]
//! selectors = ["none", "pca:20"]
//! feature_sets = ["P+E+R"]
//!
//! [backtest]
//! train_window = 123
//! test_days = 61
//! ```
//!
//! Relative paths resolve against the config file's directory.

use std::path::{Path, PathBuf};

use c2p2::classifiers::{ModelKind, ModelSpec, SelectorSpec};
use c2p2::engine::{EngineConfig, ProbabilityInit};
use c2p2::eval::{BacktestConfig, GridCell, SyntheticSpec};
use c2p2::panel::{FillPolicy, Group, PriceColumn, Task};
use c2p2::similarity::SimilarityKind;
use c2p2::{eval, seed};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{CliError, Command};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    data: Option<RawData>,
    output_dir: Option<PathBuf>,
    #[serde(default)]
    engine: RawEngine,
    #[serde(default)]
    backtest: RawBacktest,
    #[serde(default)]
    synthetic: RawSynthetic,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawData {
    ohlc_dir: Option<PathBuf>,
    group_manifest: Option<PathBuf>,
    panel_dir: Option<PathBuf>,
    coins: Option<Vec<String>>,
    tasks: Option<Vec<String>>,
    price_feature: Option<String>,
    fill_policy: Option<FillPolicy>,
    baseline: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEngine {
    lags: Option<Vec<usize>>,
    epsilon: Option<f64>,
    max_iter: Option<usize>,
    kinds: Option<Vec<SimilarityKind>>,
    seed: Option<u64>,
    models: Option<Vec<ModelEntry>>,
    selectors: Option<Vec<String>>,
    feature_sets: Option<Vec<String>>,
    refit_selector_each_iter: Option<bool>,
    init: Option<ProbabilityInit>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum ModelEntry {
    Name(String),
    Spec(ModelKind),
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBacktest {
    train_window: Option<usize>,
    test_days: Option<usize>,
    refit_stride: Option<usize>,
    validation_days: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSynthetic {
    days: Option<usize>,
    coupling: Option<f64>,
    econ_width: Option<usize>,
    own_width: Option<usize>,
    dispersion_width: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DataConfig {
    pub ohlc_dir: PathBuf,
    pub group_manifest: PathBuf,
    /// Read a previously ingested panel instead of the raw files.
    pub panel_dir: Option<PathBuf>,
    pub coins: Vec<String>,
    pub tasks: Vec<Task>,
    /// `None` leaves price history out of the panel.
    pub price_feature: Option<PriceColumn>,
    pub fill_policy: FillPolicy,
    pub baseline: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridConfig {
    pub lags: Vec<usize>,
    pub epsilon: f64,
    pub max_iter: usize,
    pub kinds: Vec<SimilarityKind>,
    pub seed: u64,
    pub models: Vec<ModelSpec>,
    pub selectors: Vec<SelectorSpec>,
    pub feature_sets: Vec<Vec<Group>>,
    pub refit_selector_each_iter: bool,
    pub init: ProbabilityInit,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WindowConfig {
    pub train_window: usize,
    pub test_days: usize,
    pub refit_stride: usize,
    pub validation_days: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SyntheticConfig {
    pub days: usize,
    pub coupling: f64,
    pub econ_width: usize,
    pub own_width: usize,
    pub dispersion_width: usize,
}

/// A validated experiment. Paths are kept as written; [`ExperimentConfig::resolve`]
/// anchors them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub data: DataConfig,
    pub engine: GridConfig,
    pub backtest: WindowConfig,
    pub synthetic: SyntheticConfig,
    #[serde(skip)]
    pub output_dir: PathBuf,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

/// Command-line overrides applied before validation.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
}

/// Reads and validates a config file, reporting every problem found.
pub fn parse_config(path: &Path, overrides: &Overrides) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Parse(format!("cannot read {}: {e}", path.display())))?;
    let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    parse_config_str(&text, &base_dir, overrides)
}

pub fn parse_config_str(text: &str, base_dir: &Path, overrides: &Overrides) -> Result<ExperimentConfig, CliError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
    let mut errors = Vec::new();
    let mut need = |field: &str| errors.push(format!("{field}: required"));

    let data = raw.data.unwrap_or(RawData {
        ohlc_dir: None,
        group_manifest: None,
        panel_dir: None,
        coins: None,
        tasks: None,
        price_feature: None,
        fill_policy: None,
        baseline: None,
    });
    let ohlc_dir = data.ohlc_dir.unwrap_or_else(|| {
        need("data.ohlc_dir");
        PathBuf::new()
    });
    let group_manifest = data.group_manifest.unwrap_or_else(|| {
        need("data.group_manifest");
        PathBuf::new()
    });
    let coins = data.coins.unwrap_or_else(|| {
        need("data.coins");
        Vec::new()
    });
    let output_dir = overrides.output_dir.clone().or(raw.output_dir).unwrap_or_else(|| {
        need("output_dir");
        PathBuf::new()
    });

    let mut tasks = Vec::new();
    for t in data.tasks.unwrap_or_else(|| vec!["close_close".into()]) {
        match t.parse::<Task>() {
            Ok(t) => tasks.push(t),
            Err(_) => errors.push(format!("data.tasks: unknown task `{t}`")),
        }
    }
    let price_feature = match data.price_feature.as_deref().unwrap_or("close") {
        "none" => None,
        "close" => Some(PriceColumn::Close),
        "open" => Some(PriceColumn::Open),
        "high" => Some(PriceColumn::High),
        "low" => Some(PriceColumn::Low),
        "ohlc" => Some(PriceColumn::Ohlc),
        other => {
            errors.push(format!("data.price_feature: unknown value `{other}`"));
            None
        }
    };

    let e = raw.engine;
    let mut models = Vec::new();
    for m in e.models.unwrap_or_else(|| vec![ModelEntry::Name("lr".into())]) {
        let kind = match m {
            ModelEntry::Spec(k) => Some(k),
            ModelEntry::Name(n) => match n.to_ascii_lowercase().as_str() {
                "lr" => Some(ModelKind::lr()),
                "rf" => Some(ModelKind::rf()),
                "knn" => Some(ModelKind::knn()),
                "lsvm" | "l-svm" | "svm" => Some(ModelKind::lsvm()),
                "gnb" | "nb" => Some(ModelKind::gnb()),
                _ => {
                    errors.push(format!("engine.models: unknown model `{n}`"));
                    None
                }
            },
        };
        if let Some(kind) = kind {
            if let Err(err) = kind.validate() {
                errors.push(format!("engine.models: {err}"));
            }
            models.push(ModelSpec::new(kind));
        }
    }
    let mut selectors = Vec::new();
    for s in e.selectors.unwrap_or_else(|| vec!["none".into()]) {
        match parse_selector(&s) {
            Some(sel) => selectors.push(sel),
            None => errors.push(format!("engine.selectors: expected `none`, `pca:K` or `anova:K` with K >= 1, got `{s}`")),
        }
    }
    let mut feature_sets = Vec::new();
    for f in e.feature_sets.unwrap_or_else(|| vec!["P+E+R".into()]) {
        match f.split('+').map(|g| g.parse::<Group>()).collect::<Result<Vec<_>, _>>() {
            Ok(mut groups) if !groups.is_empty() => {
                groups.sort();
                groups.dedup();
                feature_sets.push(groups);
            }
            _ => errors.push(format!("engine.feature_sets: expected groups joined by `+`, got `{f}`")),
        }
    }
    let lags = e.lags.unwrap_or_else(|| vec![1]);
    if let Some(&bad) = lags.iter().find(|&&l| !(1..=30).contains(&l)) {
        errors.push(format!("engine.lags: each lag must be in 1..=30, got {bad}"));
    }
    let epsilon = e.epsilon.unwrap_or(1e-3);
    if !(epsilon > 0.0) {
        errors.push(format!("engine.epsilon: must be positive, got {epsilon}"));
    }
    let max_iter = e.max_iter.unwrap_or(10);
    if max_iter == 0 {
        errors.push("engine.max_iter: must be at least 1".into());
    }
    let kinds = e.kinds.unwrap_or_else(|| SimilarityKind::ALL.to_vec());
    for (field, empty) in [
        ("data.coins", coins.is_empty()),
        ("data.tasks", tasks.is_empty() && !errors.iter().any(|m| m.starts_with("data.tasks"))),
        ("engine.lags", lags.is_empty()),
        ("engine.kinds", kinds.is_empty()),
        ("engine.models", models.is_empty() && !errors.iter().any(|m| m.starts_with("engine.models"))),
        ("engine.selectors", selectors.is_empty() && !errors.iter().any(|m| m.starts_with("engine.selectors"))),
        (
            "engine.feature_sets",
            feature_sets.is_empty() && !errors.iter().any(|m| m.starts_with("engine.feature_sets")),
        ),
    ] {
        if empty && !errors.iter().any(|m| m == &format!("{field}: required")) {
            errors.push(format!("{field}: must not be empty"));
        }
    }
    let mut seen = std::collections::BTreeSet::new();
    for c in &coins {
        if !seen.insert(c) {
            errors.push(format!("data.coins: duplicate coin `{c}`"));
        }
        if c.is_empty() || c.contains(['/', '\\']) {
            errors.push(format!("data.coins: `{c}` is not usable as a file name"));
        }
    }

    let b = raw.backtest;
    let defaults = BacktestConfig::default();
    let backtest = WindowConfig {
        train_window: b.train_window.unwrap_or(defaults.train_window),
        test_days: b.test_days.unwrap_or(defaults.test_days),
        refit_stride: b.refit_stride.unwrap_or(defaults.refit_stride),
        validation_days: b.validation_days,
    };
    let max_lag = lags.iter().copied().max().unwrap_or(1);
    if backtest.train_window < max_lag + 2 {
        errors.push(format!(
            "backtest.train_window: must be at least the largest lag + 2 ({}), got {}",
            max_lag + 2,
            backtest.train_window
        ));
    }
    if backtest.test_days == 0 {
        errors.push("backtest.test_days: must be at least 1".into());
    }
    if backtest.refit_stride == 0 {
        errors.push("backtest.refit_stride: must be at least 1".into());
    }
    if backtest.validation_days == Some(0) {
        errors.push("backtest.validation_days: must be at least 1 when set".into());
    }

    let s = raw.synthetic;
    let synth_defaults = SyntheticSpec::new(1, 10, 0.0, 0);
    let synthetic = SyntheticConfig {
        days: s.days.unwrap_or(300),
        coupling: s.coupling.unwrap_or(0.8),
        econ_width: s.econ_width.unwrap_or(synth_defaults.econ_width),
        own_width: s.own_width.unwrap_or(synth_defaults.own_width),
        dispersion_width: s.dispersion_width.unwrap_or(synth_defaults.dispersion_width),
    };
    if synthetic.days < 10 {
        errors.push(format!("synthetic.days: must be at least 10, got {}", synthetic.days));
    }
    if !(0.0..=1.0).contains(&synthetic.coupling) {
        errors.push(format!("synthetic.coupling: must be in [0, 1], got {}", synthetic.coupling));
    }

    if !errors.is_empty() {
        return Err(CliError::Validation(errors));
    }
    Ok(ExperimentConfig {
        data: DataConfig {
            ohlc_dir,
            group_manifest,
            panel_dir: data.panel_dir,
            coins,
            tasks,
            price_feature,
            fill_policy: data.fill_policy.unwrap_or_default(),
            baseline: data.baseline,
        },
        engine: GridConfig {
            lags,
            epsilon,
            max_iter,
            kinds,
            seed: overrides.seed.or(e.seed).unwrap_or(0),
            models,
            selectors,
            feature_sets,
            refit_selector_each_iter: e.refit_selector_each_iter.unwrap_or(true),
            init: e.init.unwrap_or_default(),
        },
        backtest,
        synthetic,
        output_dir: if output_dir.is_absolute() { output_dir } else { base_dir.join(output_dir) },
        base_dir: base_dir.to_path_buf(),
    })
}

fn parse_selector(s: &str) -> Option<SelectorSpec> {
    let s = s.trim().to_ascii_lowercase();
    if s == "none" {
        return Some(SelectorSpec::None);
    }
    let (method, k) = s.split_once(':')?;
    let k: usize = k.trim().parse().ok().filter(|&k| k >= 1)?;
    match method.trim() {
        "pca" => Some(SelectorSpec::Pca { k }),
        "anova" => Some(SelectorSpec::Anova { k }),
        _ => None,
    }
}

impl ExperimentConfig {
    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }

    /// Checks that the inputs `command` reads exist.
    pub fn check_inputs(&self, command: Command) -> Result<(), CliError> {
        if matches!(command, Command::Generate | Command::Report) {
            return Ok(());
        }
        let mut errors = Vec::new();
        let uses_panel_dir = command != Command::Ingest && self.data.panel_dir.is_some();
        let ohlc = self.resolve(&self.data.ohlc_dir);
        if !ohlc.is_dir() {
            errors.push(format!("data.ohlc_dir: {} is not a directory", ohlc.display()));
        } else {
            for coin in &self.data.coins {
                let f = ohlc.join(format!("{coin}.csv"));
                if !f.is_file() {
                    errors.push(format!("data.ohlc_dir: missing {}", f.display()));
                }
            }
        }
        if !uses_panel_dir && !self.resolve(&self.data.group_manifest).is_file() {
            errors.push(format!(
                "data.group_manifest: {} does not exist",
                self.resolve(&self.data.group_manifest).display()
            ));
        }
        if let Some(b) = &self.data.baseline {
            if !self.resolve(b).is_file() {
                errors.push(format!("data.baseline: {} does not exist", self.resolve(b).display()));
            }
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(CliError::Validation(errors))
        }
    }

    /// Hex SHA-256 of the canonical JSON form; the output directory is excluded.
    pub fn hash(&self) -> String {
        hex_digest(&serde_json::to_vec(self).expect("config serializes"))
    }

    /// `<command>-<first 12 hex digits of the config hash>`.
    pub fn run_id(&self, command: Command) -> String {
        format!("{}-{}", command.as_str(), &self.hash()[..12])
    }

    pub fn grid(&self) -> Vec<GridCell> {
        eval::build_grid(
            &self.engine.lags,
            &self.engine.models,
            &self.engine.selectors,
            &self.engine.feature_sets,
        )
    }

    pub fn backtest_config(&self, ablate: bool) -> BacktestConfig {
        BacktestConfig {
            train_window: self.backtest.train_window,
            test_days: self.backtest.test_days,
            tasks: self.data.tasks.clone(),
            refit_stride: self.backtest.refit_stride,
            ablate_similarity: ablate,
            validation_days: self.backtest.validation_days,
            engine: EngineConfig {
                epsilon: self.engine.epsilon,
                max_iter: self.engine.max_iter,
                kinds: self.engine.kinds.clone(),
                seed: self.engine.seed,
                refit_selector_each_iter: self.engine.refit_selector_each_iter,
                init: self.engine.init,
                ..EngineConfig::default()
            },
        }
    }

    /// Seed of the synthetic generator, split from the root seed.
    pub fn synthetic_seed(&self) -> u64 {
        seed::derive(self.engine.seed, &[seed::hash_str("synthetic")])
    }

    pub fn synthetic_spec(&self) -> SyntheticSpec {
        let mut spec = SyntheticSpec::new(self.data.coins.len(), self.synthetic.days, self.synthetic.coupling, self.synthetic_seed())
            .with_coins(self.data.coins.clone());
        spec.econ_width = self.synthetic.econ_width;
        spec.own_width = self.synthetic.own_width;
        spec.dispersion_width = self.synthetic.dispersion_width;
        spec
    }
}

pub(crate) fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}
