use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::backtest::BacktestReport;
use super::{lift, paired_t_test, EvalError};
use crate::panel::Task;

/// One (coin, task, cell) result; the unit row of `report.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub coin: String,
    pub task: Task,
    pub cell: usize,
    pub classifier: String,
    pub features: String,
    pub lag: usize,
    pub selector: String,
    pub similarity: bool,
    /// Empty when the test labels hold a single class.
    pub auc: Option<f64>,
    pub validation_auc: Option<f64>,
    pub baseline_auc: Option<f64>,
    pub lift: Option<f64>,
    pub fits: usize,
    pub prediction_days: usize,
    pub mean_iterations: f64,
    pub max_iterations: usize,
    pub best_on_test: bool,
    pub best_on_validation: bool,
}

/// Paired t-test of two cells' AUCs across coins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairTest {
    pub task: Task,
    pub cell_a: usize,
    pub cell_b: usize,
    pub coins: usize,
    /// Empty when fewer than two coins have both AUCs or the differences are degenerate.
    pub t: Option<f64>,
    pub p: Option<f64>,
}

pub(crate) fn pair_tests(scores: &[ScoreRow], tasks: &[Task], cells: usize) -> Vec<PairTest> {
    let mut out = Vec::new();
    for &task in tasks {
        let mut by_coin: BTreeMap<&str, Vec<Option<f64>>> = BTreeMap::new();
        for r in scores.iter().filter(|r| r.task == task) {
            by_coin.entry(&r.coin).or_insert_with(|| vec![None; cells])[r.cell] = r.auc;
        }
        for a in 0..cells {
            for b in a + 1..cells {
                let (xa, xb): (Vec<f64>, Vec<f64>) = by_coin
                    .values()
                    .filter_map(|v| Some((v[a]?, v[b]?)))
                    .unzip();
                let tp = paired_t_test(&xa, &xb).ok();
                out.push(PairTest {
                    task,
                    cell_a: a,
                    cell_b: b,
                    coins: xa.len(),
                    t: tp.map(|x| x.0),
                    p: tp.map(|x| x.1),
                });
            }
        }
    }
    out
}

pub(crate) fn write_score_rows<W: Write>(rows: &[ScoreRow], sink: W) -> Result<(), EvalError> {
    let mut w = csv::Writer::from_writer(sink);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_score_rows<R: Read>(source: R) -> Result<Vec<ScoreRow>, EvalError> {
    let mut reader = csv::Reader::from_reader(source);
    Ok(reader.deserialize().collect::<Result<Vec<ScoreRow>, _>>()?)
}

fn fmt3(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.3}"))
}

pub(crate) fn render_markdown(report: &BacktestReport) -> String {
    let mut s = String::new();
    let span = |days: &[crate::panel::Day]| match (days.first(), days.last()) {
        (Some(a), Some(b)) => format!("{a} to {b} ({} days)", days.len()),
        _ => "none".to_string(),
    };
    let _ = writeln!(s, "# Backtest report\n");
    let _ = writeln!(
        s,
        "Similarity features: {}. Test days: {}.\n",
        if report.ablated { "off" } else { "on" },
        span(&report.test_days)
    );
    let _ = writeln!(s, "## Best cell per coin (best-on-test)\n");
    best_table(&mut s, report.best_on_test());
    if !report.validation_days.is_empty() {
        let _ = writeln!(
            s,
            "\n## Best cell per coin (chosen on validation days {}, scored on test)\n",
            span(&report.validation_days)
        );
        best_table(&mut s, report.best_on_validation());
    }
    let _ = writeln!(s, "\n## Grid\n");
    let _ = writeln!(s, "| Cell | Classifier | Features | Lag | Selector |");
    let _ = writeln!(s, "|---|---|---|---|---|");
    for (i, c) in report.grid.iter().enumerate() {
        let _ = writeln!(
            s,
            "| {i} | {} | {} | {} | {} |",
            c.model.kind.label(),
            c.features_label(),
            c.lag,
            c.selector.label()
        );
    }
    if !report.pair_tests.is_empty() {
        let _ = writeln!(s, "\n## Paired t-tests across coins\n");
        let _ = writeln!(s, "| Task | Cell A | Cell B | Coins | t | p |");
        let _ = writeln!(s, "|---|---|---|---|---|---|");
        for t in &report.pair_tests {
            let _ = writeln!(
                s,
                "| {} | {} | {} | {} | {} | {} |",
                t.task,
                t.cell_a,
                t.cell_b,
                t.coins,
                fmt3(t.t),
                t.p.map_or_else(|| "n/a".to_string(), |p| format!("{p:.3e}"))
            );
        }
    }
    s
}

fn best_table<'a>(s: &mut String, rows: impl Iterator<Item = &'a ScoreRow>) {
    let _ = writeln!(s, "| Coin | Task | Classifier | Features | Lag | Selector | AUC | Lift |");
    let _ = writeln!(s, "|---|---|---|---|---|---|---|---|");
    for r in rows {
        let _ = writeln!(
            s,
            "| {} | {} | {} | {} | {} | {} | {} | {} |",
            r.coin,
            r.task,
            r.classifier,
            r.features,
            r.lag,
            r.selector,
            fmt3(r.auc),
            fmt3(r.lift)
        );
    }
}

/// Best full-model result against the best result with similarity removed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub coin: String,
    pub task: Task,
    pub classifier: String,
    pub features: String,
    pub lag: usize,
    pub selector: String,
    pub auc: f64,
    pub ablated_auc: f64,
    /// `auc / ablated_auc`.
    pub lift: f64,
    pub baseline_auc: Option<f64>,
    pub baseline_lift: Option<f64>,
}

/// Pairs each (coin, task)'s best-on-test row from a full run with the one from an
/// ablated run. Pairs missing on either side are skipped.
pub fn compare_runs(full: &[ScoreRow], ablated: &[ScoreRow]) -> Result<Vec<ComparisonRow>, EvalError> {
    let best = |rows: &[ScoreRow]| -> BTreeMap<(String, Task), ScoreRow> {
        rows.iter()
            .filter(|r| r.best_on_test && r.auc.is_some())
            .map(|r| ((r.coin.clone(), r.task), r.clone()))
            .collect()
    };
    let ablated = best(ablated);
    let mut out = Vec::new();
    for (key, f) in best(full) {
        let Some(a) = ablated.get(&key) else { continue };
        let (auc, ablated_auc) = (f.auc.expect("filtered"), a.auc.expect("filtered"));
        out.push(ComparisonRow {
            coin: key.0,
            task: key.1,
            classifier: f.classifier,
            features: f.features,
            lag: f.lag,
            selector: f.selector,
            auc,
            ablated_auc,
            lift: lift(auc, ablated_auc)?,
            baseline_auc: f.baseline_auc,
            baseline_lift: f.lift,
        });
    }
    Ok(out)
}

pub fn write_comparison_csv<W: Write>(rows: &[ComparisonRow], sink: W) -> Result<(), EvalError> {
    let mut w = csv::Writer::from_writer(sink);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Markdown table of a comparison plus a paired t-test of full against ablated AUCs.
pub fn comparison_markdown(rows: &[ComparisonRow]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# Similarity ablation\n");
    let _ = writeln!(
        s,
        "| Coin | Task | Classifier | Features | Lag | Selector | AUC | AUC without similarity | Lift | Baseline lift |"
    );
    let _ = writeln!(s, "|---|---|---|---|---|---|---|---|---|---|");
    for r in rows {
        let _ = writeln!(
            s,
            "| {} | {} | {} | {} | {} | {} | {:.3} | {:.3} | {:.3} | {} |",
            r.coin,
            r.task,
            r.classifier,
            r.features,
            r.lag,
            r.selector,
            r.auc,
            r.ablated_auc,
            r.lift,
            fmt3(r.baseline_lift)
        );
    }
    let full: Vec<f64> = rows.iter().map(|r| r.auc).collect();
    let ablated: Vec<f64> = rows.iter().map(|r| r.ablated_auc).collect();
    if let Ok((t, p)) = paired_t_test(&full, &ablated) {
        let _ = writeln!(s, "\nPaired t-test over {} rows: t = {t:.3}, p = {p:.3e}.", rows.len());
    }
    s
}
