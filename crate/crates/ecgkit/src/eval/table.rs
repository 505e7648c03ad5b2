//! Score tables, significant-win counting, and radar normalization.
//!
//! A score table is a long-format list of rows `(dataset, model, metric,
//! seed, value)`. Win counting compares, within every `(dataset, metric)`
//! cell, the best model (by mean over seeds) against the runner-up with a
//! paired two-tailed t-test over seed-aligned scores; the best model earns a
//! win when `p < alpha`. Radar normalization rescales per-cell model means
//! to `[0, 1]` via min-max.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::stats::paired_ttest;

/// Default significance level for win counting.
pub const DEFAULT_ALPHA: f64 = 0.05;

/// One observation: a model's metric value on a dataset for one seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub dataset: String,
    pub model: String,
    pub metric: String,
    pub seed: u64,
    pub value: f64,
}

/// Significant-win total for one model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WinRow {
    pub model: String,
    pub wins: u64,
}

/// Min-max normalized mean for one model in one `(dataset, metric)` cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadarRow {
    pub dataset: String,
    pub metric: String,
    pub model: String,
    pub normalized: f64,
}

/// Radar rows plus the cells whose models all tied (forced to 0.5).
#[derive(Debug, Clone, PartialEq)]
pub struct RadarTable {
    pub rows: Vec<RadarRow>,
    pub constant_cells: Vec<(String, String)>,
}

fn check_headers(got: &csv::StringRecord, want: &[&str], what: &str) -> Result<()> {
    let got: Vec<&str> = got.iter().collect();
    if got != want {
        return Err(Error::Parse(format!(
            "{what} header must be {} but found {}",
            want.join(","),
            got.join(",")
        )));
    }
    Ok(())
}

/// Read a score table CSV with header `dataset,model,metric,seed,value`.
pub fn read_scores(path: &Path) -> Result<Vec<ScoreRow>> {
    let mut reader = csv::Reader::from_path(path)?;
    check_headers(
        reader.headers().map_err(csv_err)?,
        &["dataset", "model", "metric", "seed", "value"],
        "score table",
    )?;
    let mut rows = Vec::new();
    for record in reader.deserialize() {
        let row: ScoreRow = record.map_err(csv_err)?;
        if !row.value.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "non-finite score for model {} on {}/{} seed {}",
                row.model, row.dataset, row.metric, row.seed
            )));
        }
        rows.push(row);
    }
    Ok(rows)
}

fn csv_err(err: csv::Error) -> Error {
    match err.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Parse(format!("csv: {other:?}")),
    }
}

impl From<csv::Error> for Error {
    fn from(err: csv::Error) -> Self {
        csv_err(err)
    }
}

/// Write a score table CSV.
pub fn write_scores(path: &Path, rows: &[ScoreRow]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}

/// Write win totals as `model,wins`.
pub fn write_wins(path: &Path, rows: &[WinRow]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}

/// Read win totals back (CSV `model,wins`).
pub fn read_wins(path: &Path) -> Result<Vec<WinRow>> {
    let mut reader = csv::Reader::from_path(path)?;
    check_headers(reader.headers().map_err(csv_err)?, &["model", "wins"], "win table")?;
    let mut rows = Vec::new();
    for record in reader.deserialize() {
        rows.push(record.map_err(csv_err)?);
    }
    Ok(rows)
}

/// Write radar rows as `dataset,metric,model,normalized`.
pub fn write_radar(path: &Path, rows: &[RadarRow]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}

/// seed -> value maps per model, per `(dataset, metric)` cell, all in
/// deterministic sorted order. Rejects duplicate observations.
type Cells = BTreeMap<(String, String), BTreeMap<String, BTreeMap<u64, f64>>>;

fn group_cells(rows: &[ScoreRow]) -> Result<Cells> {
    let mut cells: Cells = BTreeMap::new();
    for row in rows {
        let prior = cells
            .entry((row.dataset.clone(), row.metric.clone()))
            .or_default()
            .entry(row.model.clone())
            .or_default()
            .insert(row.seed, row.value);
        if prior.is_some() {
            return Err(Error::InvalidParameter(format!(
                "duplicate score for model {} on {}/{} seed {}",
                row.model, row.dataset, row.metric, row.seed
            )));
        }
    }
    Ok(cells)
}

fn mean(values: &BTreeMap<u64, f64>) -> f64 {
    values.values().sum::<f64>() / values.len() as f64
}

/// Rank models in one cell by mean descending, name ascending on ties.
fn ranked_models(cell: &BTreeMap<String, BTreeMap<u64, f64>>) -> Vec<(&String, f64)> {
    let mut ranked: Vec<(&String, f64)> = cell.iter().map(|(m, v)| (m, mean(v))).collect();
    ranked.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(b.0)));
    ranked
}

/// Outcome of the top-vs-runner-up test in one `(dataset, metric)` cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellReport {
    pub dataset: String,
    pub metric: String,
    pub top: String,
    pub runner_up: String,
    pub top_mean: f64,
    pub runner_up_mean: f64,
    pub t: f64,
    pub p: f64,
    pub degenerate: bool,
    pub significant: bool,
}

/// Run the per-cell comparisons: rank models by mean (name breaks ties),
/// then paired-t-test the top model against the runner-up over their
/// shared, seed-aligned scores. Reports come out sorted by
/// `(dataset, metric)`.
pub fn cell_reports(rows: &[ScoreRow], alpha: f64) -> Result<Vec<CellReport>> {
    if !(0.0 < alpha && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "alpha must be in (0, 1), got {alpha}"
        )));
    }
    if rows.is_empty() {
        return Err(Error::EmptyInput("score table".into()));
    }
    let cells = group_cells(rows)?;
    let mut reports = Vec::new();
    for ((dataset, metric), cell) in &cells {
        if cell.len() < 2 {
            return Err(Error::FewerThanTwoModels {
                dataset: dataset.clone(),
                metric: metric.clone(),
            });
        }
        let ranked = ranked_models(cell);
        let (top, runner) = (ranked[0].0, ranked[1].0);
        let top_scores = &cell[top];
        let runner_scores = &cell[runner];
        let top_seeds: BTreeSet<u64> = top_scores.keys().copied().collect();
        let runner_seeds: BTreeSet<u64> = runner_scores.keys().copied().collect();
        if top_seeds != runner_seeds {
            return Err(Error::MismatchedSeeds {
                dataset: dataset.clone(),
                metric: metric.clone(),
            });
        }
        // BTreeMap iteration is seed-sorted, so the pairing is aligned.
        let a: Vec<f64> = top_scores.values().copied().collect();
        let b: Vec<f64> = runner_scores.values().copied().collect();
        let test = paired_ttest(&a, &b)?;
        reports.push(CellReport {
            dataset: dataset.clone(),
            metric: metric.clone(),
            top: top.clone(),
            runner_up: runner.clone(),
            top_mean: ranked[0].1,
            runner_up_mean: ranked[1].1,
            t: test.t,
            p: test.p,
            degenerate: test.degenerate,
            significant: test.p < alpha,
        });
    }
    Ok(reports)
}

/// Count, per model, the `(dataset, metric)` cells where it is both
/// top-ranked by mean and significantly better than the runner-up under a
/// paired t-test at level `alpha`. Every model in the table gets a row,
/// sorted by wins descending then model name.
pub fn count_significant_wins(rows: &[ScoreRow], alpha: f64) -> Result<Vec<WinRow>> {
    let reports = cell_reports(rows, alpha)?;
    let mut wins: BTreeMap<&str, u64> = BTreeMap::new();
    for row in rows {
        wins.entry(&row.model).or_insert(0);
    }
    for report in &reports {
        if report.significant {
            *wins.get_mut(report.top.as_str()).unwrap() += 1;
        }
    }
    let mut out: Vec<WinRow> = wins
        .into_iter()
        .map(|(model, wins)| WinRow {
            model: model.to_string(),
            wins,
        })
        .collect();
    out.sort_by(|a, b| b.wins.cmp(&a.wins).then_with(|| a.model.cmp(&b.model)));
    Ok(out)
}

/// Min-max normalize per-cell model means to `[0, 1]`. Cells where every
/// model has the same mean collapse to 0.5 and are reported (and warned)
/// rather than dividing by zero. Rows are sorted by
/// `(dataset, metric, model)`.
pub fn normalize_radar(rows: &[ScoreRow]) -> Result<RadarTable> {
    if rows.is_empty() {
        return Err(Error::EmptyInput("score table".into()));
    }
    let cells = group_cells(rows)?;
    let mut out = Vec::new();
    let mut constant_cells = Vec::new();
    for ((dataset, metric), cell) in &cells {
        let means: BTreeMap<&String, f64> = cell.iter().map(|(m, v)| (m, mean(v))).collect();
        let lo = means.values().cloned().fold(f64::INFINITY, f64::min);
        let hi = means.values().cloned().fold(f64::NEG_INFINITY, f64::max);
        let constant = lo == hi;
        if constant {
            log::warn!(
                "all models tie at {lo} on {dataset}/{metric}; radar values forced to 0.5"
            );
            constant_cells.push((dataset.clone(), metric.clone()));
        }
        for (model, value) in means {
            let normalized = if constant {
                0.5
            } else {
                (value - lo) / (hi - lo)
            };
            out.push(RadarRow {
                dataset: dataset.clone(),
                metric: metric.clone(),
                model: model.clone(),
                normalized,
            });
        }
    }
    // Cell iteration and the per-cell mean map are both sorted already.
    Ok(RadarTable {
        rows: out,
        constant_cells,
    })
}
