use chrono::{Days, NaiveDate};
use rand::Rng;
use rand_distr::StandardNormal;

use super::EvalError;
use crate::panel::{Day, FeaturePanel, FillPolicy, Group, LabelPanel, OhlcSeries, Task};
use crate::seed;

/// Parameters of a synthetic market driven by one common factor.
///
/// Coin `c` moves by `r = coupling * z + (1 - coupling) * e_c` with `z` and `e_c` standard
/// normal. Day `t`'s feature row looks ahead to the move of day `t + 1`:
///
/// * `P`: the day's close.
/// * `E`: noisy copies of `z`, shared by all coins.
/// * `R`: noisy copies of `e_c`, then `dispersion_width` columns `h * eta` with fresh
///   `eta ~ N(0, 1)` per coin and `h = exp(-dispersion_gain * coupling * z)`. Their mean is
///   zero whatever `z` is, but coins sit close together on up days, which only
///   cross-coin similarity can see.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub coins: Vec<String>,
    pub days: usize,
    pub coupling: f64,
    pub seed: u64,
    pub start: Day,
    pub econ_width: usize,
    pub econ_noise: f64,
    pub own_width: usize,
    pub own_noise: f64,
    pub dispersion_width: usize,
    pub dispersion_gain: f64,
    /// Daily log-return scale.
    pub volatility: f64,
}

impl SyntheticSpec {
    pub fn new(coins: usize, days: usize, coupling: f64, seed: u64) -> Self {
        Self {
            coins: default_coin_names(coins),
            days,
            coupling,
            seed,
            start: NaiveDate::from_ymd_opt(2018, 1, 1).expect("valid date"),
            econ_width: 4,
            econ_noise: 2.0,
            own_width: 2,
            own_noise: 1.0,
            dispersion_width: 4,
            dispersion_gain: 0.4,
            volatility: 0.02,
        }
    }

    pub fn with_coins(mut self, coins: Vec<String>) -> Self {
        self.coins = coins;
        self
    }

    /// `(group, width)` of the generated panel.
    pub fn group_widths(&self) -> [(Group, usize); 3] {
        [
            (Group::P, 1),
            (Group::E, self.econ_width),
            (Group::R, self.own_width + self.dispersion_width),
        ]
    }
}

pub fn default_coin_names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("coin{i:02}")).collect()
}

#[derive(Debug, Clone)]
pub struct SyntheticMarket {
    pub panel: FeaturePanel,
    pub series: Vec<OhlcSeries>,
    /// One label panel per task, in `Task::ALL` order.
    pub labels: Vec<LabelPanel>,
}

impl SyntheticMarket {
    pub fn labels_for(&self, task: Task) -> &LabelPanel {
        self.labels.iter().find(|l| l.task == task).expect("all tasks generated")
    }
}

/// Deterministic for a given spec.
pub fn generate_synthetic_market(spec: &SyntheticSpec) -> Result<SyntheticMarket, EvalError> {
    let c_count = spec.coins.len();
    if c_count == 0 {
        return Err(EvalError::BadSpec("at least one coin".into()));
    }
    if spec.days < 10 {
        return Err(EvalError::BadSpec(format!("at least 10 days, got {}", spec.days)));
    }
    if !(0.0..=1.0).contains(&spec.coupling) {
        return Err(EvalError::BadSpec(format!("coupling {} outside [0, 1]", spec.coupling)));
    }
    if !(spec.volatility > 0.0) || spec.econ_noise < 0.0 || spec.own_noise < 0.0 {
        return Err(EvalError::BadSpec("volatility must be positive and noise scales non-negative".into()));
    }
    let n = spec.days;
    let k = spec.coupling;
    let normal = |rng: &mut seed::Rng| -> f64 { rng.sample(StandardNormal) };

    // Index t holds the move from day t - 1 to day t; index n is the move after the last day.
    let mut common_rng = seed::rng(seed::derive(spec.seed, &[1]));
    let z: Vec<f64> = (0..=n).map(|_| normal(&mut common_rng)).collect();
    let mut econ_rng = seed::rng(seed::derive(spec.seed, &[2]));
    let econ: Vec<Vec<f64>> = (0..n)
        .map(|t| (0..spec.econ_width).map(|_| z[t + 1] + spec.econ_noise * normal(&mut econ_rng)).collect())
        .collect();

    let days: Vec<Day> = (0..n).map(|t| spec.start + Days::new(t as u64)).collect();
    let width: usize = spec.group_widths().iter().map(|g| g.1).sum();
    let mut values = Vec::with_capacity(c_count * n * width);
    let mut series = Vec::with_capacity(c_count);
    for (c, name) in spec.coins.iter().enumerate() {
        let mut rng = seed::rng(seed::derive(spec.seed, &[3, c as u64]));
        let e: Vec<f64> = (0..=n).map(|_| normal(&mut rng)).collect();
        let mut close = Vec::with_capacity(n);
        let (mut open, mut high, mut low) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
        let mut level = 100.0 * (1.0 + c as f64);
        for t in 0..n {
            let prev = level;
            if t > 0 {
                level *= (spec.volatility * (k * z[t] + (1.0 - k) * e[t])).exp();
            }
            let o = prev * (0.25 * spec.volatility * normal(&mut rng)).exp();
            let top = o.max(level) * (0.5 * spec.volatility * normal(&mut rng).abs()).exp();
            let bottom = o.min(level) * (-0.5 * spec.volatility * normal(&mut rng).abs()).exp();
            open.push(o);
            high.push(top);
            low.push(bottom);
            close.push(level);
        }
        for t in 0..n {
            values.push(close[t]);
            values.extend_from_slice(&econ[t]);
            for _ in 0..spec.own_width {
                values.push(e[t + 1] + spec.own_noise * normal(&mut rng));
            }
            let h = (-spec.dispersion_gain * k * z[t + 1]).exp();
            for _ in 0..spec.dispersion_width {
                values.push(h * normal(&mut rng));
            }
        }
        series.push(OhlcSeries {
            coin: name.clone(),
            days: days.clone(),
            open,
            high,
            low,
            close,
        });
    }
    let panel = FeaturePanel::from_dense(
        spec.coins.clone(),
        days.clone(),
        &spec.group_widths(),
        FillPolicy::default(),
        values,
    )?;
    let labels = Task::ALL
        .iter()
        .map(|&task| LabelPanel::from_series(task, &spec.coins, &days, &series))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SyntheticMarket { panel, series, labels })
}
