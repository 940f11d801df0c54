//! Aggregation of experiment results into tables, trend lines and
//! plot-ready CSV files.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

use crate::harness::{CellResult, ExperimentResult, RobustnessResult};
use crate::protocol::{SessionMode, SessionResult, SessionStatus};

pub const DEFAULT_LEVEL: f64 = 0.95;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("need at least 2 values for a confidence interval, got {0}")]
    TooFewValues(usize),
    #[error("confidence level must be in (0, 1), got {0}")]
    Level(f64),
    #[error("nothing to report")]
    Empty,
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("CSV error in {path}: {message}")]
    Csv { path: String, message: String },
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

/// Percentage change of every entry relative to the first, or `None` when
/// the first value is zero.
pub fn pct_change(series: &[f64]) -> Option<Vec<f64>> {
    let first = *series.first()?;
    if first == 0.0 {
        return None;
    }
    Some(series.iter().map(|v| 100.0 * (v - first) / first).collect())
}

/// Two-sided Student-t critical value for `df` degrees of freedom.
pub fn t_critical(df: f64, level: f64) -> Result<f64, ReportError> {
    if !(level > 0.0 && level < 1.0) {
        return Err(ReportError::Level(level));
    }
    let dist = StudentsT::new(0.0, 1.0, df).map_err(|_| ReportError::TooFewValues(df as usize + 1))?;
    Ok(dist.inverse_cdf(1.0 - (1.0 - level) / 2.0))
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample standard deviation (n − 1 denominator).
pub fn sample_std(values: &[f64]) -> f64 {
    // exact zero for constant input, which the running mean can miss by an ulp
    if values.windows(2).all(|w| w[0] == w[1]) {
        return 0.0;
    }
    let m = mean(values);
    let ss: f64 = values.iter().map(|v| (v - m).powi(2)).sum();
    (ss / (values.len() as f64 - 1.0)).sqrt()
}

/// Mean and confidence half-width `t · s / √n`.
pub fn mean_ci(values: &[f64], level: f64) -> Result<(f64, f64), ReportError> {
    let n = values.len();
    if n < 2 {
        return Err(ReportError::TooFewValues(n));
    }
    let t = t_critical((n - 1) as f64, level)?;
    Ok((mean(values), t * sample_std(values) / (n as f64).sqrt()))
}

/// A mean with its half-width; the half-width is absent below two values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub half_width: Option<f64>,
    pub count: usize,
}

impl Estimate {
    pub fn of(values: &[f64], level: f64) -> Option<Self> {
        match values.len() {
            0 => None,
            1 => Some(Estimate {
                mean: values[0],
                half_width: None,
                count: 1,
            }),
            n => {
                let (mean, hw) = mean_ci(values, level).ok()?;
                Some(Estimate {
                    mean,
                    half_width: Some(hw),
                    count: n,
                })
            }
        }
    }

    fn scaled(self, factor: f64) -> Self {
        Estimate {
            mean: self.mean * factor,
            half_width: self.half_width.map(|h| h * factor),
            count: self.count,
        }
    }
}

impl fmt::Display for Estimate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.half_width {
            Some(h) => write!(f, "{:.2} ± {:.2}", self.mean, h),
            None => write!(f, "{:.2}", self.mean),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    SatisfactionRatio,
    SatisfactionScore,
    EquityScore,
    Interactions,
}

impl Metric {
    pub const ALL: [Metric; 4] = [
        Metric::SatisfactionRatio,
        Metric::SatisfactionScore,
        Metric::EquityScore,
        Metric::Interactions,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::SatisfactionRatio => "satisfaction_ratio",
            Metric::SatisfactionScore => "satisfaction_score",
            Metric::EquityScore => "equity_score",
            Metric::Interactions => "avg_interactions",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            Metric::SatisfactionRatio => "Satisfaction Ratio (%, ↑)",
            Metric::SatisfactionScore => "Satisfaction Score (↑)",
            Metric::EquityScore => "Equity Score (↓)",
            Metric::Interactions => "Avg. Number of Interactions (↓)",
        }
    }

    fn of(self, row: &ScenarioRow) -> Option<f64> {
        match self {
            Metric::SatisfactionRatio => Some(row.ratio),
            Metric::SatisfactionScore => Some(row.score),
            Metric::EquityScore => Some(row.equity),
            Metric::Interactions => row.avg_interactions,
        }
    }

    /// Factor applied in tables; ratios are shown as percentages.
    fn display_factor(self) -> f64 {
        if self == Metric::SatisfactionRatio {
            100.0
        } else {
            1.0
        }
    }
}

mod na {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(x) => s.serialize_f64(*x),
            None => s.serialize_str("n/a"),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        let s = String::deserialize(d)?;
        match s.trim() {
            "" | "n/a" => Ok(None),
            t => t.parse().map(Some).map_err(serde::de::Error::custom),
        }
    }
}

/// Identifies the cell a row belongs to.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CellKey {
    pub cell: String,
    pub n: usize,
    pub k: usize,
    pub knowledge_graph: bool,
    pub mode: SessionMode,
    /// Paraphrase passes, robustness runs only.
    pub paraphrases: Option<usize>,
}

impl CellKey {
    pub fn setting(&self) -> String {
        let mut s = format!("n = {}, K = {}", self.n, self.k);
        if self.knowledge_graph {
            s.push_str(" (w/ Knowledge Graph)");
        }
        s
    }

    fn of(cell: &CellResult, paraphrases: Option<usize>) -> Self {
        CellKey {
            cell: cell.cell.label.clone(),
            n: cell.cell.n,
            k: cell.cell.k,
            knowledge_graph: cell.cell.use_knowledge_graph,
            mode: cell.cell.mode,
            paraphrases,
        }
    }
}

/// One row of `rounds.csv`: a scenario at one round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioRow {
    pub cell: String,
    pub n: usize,
    pub k: usize,
    pub knowledge_graph: bool,
    pub mode: SessionMode,
    pub paraphrases: Option<usize>,
    pub scenario_id: String,
    pub round: u32,
    pub ratio: f64,
    pub score: f64,
    pub equity: f64,
    #[serde(with = "na")]
    pub avg_interactions: Option<f64>,
    pub violations: usize,
}

impl ScenarioRow {
    fn key(&self) -> CellKey {
        CellKey {
            cell: self.cell.clone(),
            n: self.n,
            k: self.k,
            knowledge_graph: self.knowledge_graph,
            mode: self.mode,
            paraphrases: self.paraphrases,
        }
    }
}

/// One row of `scenarios.csv`: how a scenario ended.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioStatusRow {
    pub cell: String,
    pub n: usize,
    pub k: usize,
    pub knowledge_graph: bool,
    pub mode: SessionMode,
    pub paraphrases: Option<usize>,
    pub scenario_id: String,
    pub seed: u64,
    pub completed: bool,
    pub rounds: usize,
    pub failed_stage: String,
    pub message: String,
}

impl ScenarioStatusRow {
    fn key(&self) -> CellKey {
        CellKey {
            cell: self.cell.clone(),
            n: self.n,
            k: self.k,
            knowledge_graph: self.knowledge_graph,
            mode: self.mode,
            paraphrases: self.paraphrases,
        }
    }
}

/// Flat per-scenario data every report number is computed from.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReportData {
    pub scenarios: Vec<ScenarioStatusRow>,
    pub rounds: Vec<ScenarioRow>,
}

impl ReportData {
    fn push_cell(&mut self, cell: &CellResult, paraphrases: Option<usize>) {
        let key = CellKey::of(cell, paraphrases);
        for s in &cell.sessions {
            self.push_session(&key, s);
        }
    }

    fn push_session(&mut self, key: &CellKey, s: &SessionResult) {
        let (stage, message) = match &s.status {
            SessionStatus::Completed => (String::new(), String::new()),
            SessionStatus::Failed { stage, message, .. } => (stage.to_string(), message.clone()),
        };
        self.scenarios.push(ScenarioStatusRow {
            cell: key.cell.clone(),
            n: key.n,
            k: key.k,
            knowledge_graph: key.knowledge_graph,
            mode: key.mode,
            paraphrases: key.paraphrases,
            scenario_id: s.scenario_id.clone(),
            seed: s.seed,
            completed: s.is_completed(),
            rounds: s.rounds.len(),
            failed_stage: stage,
            message,
        });
        for r in &s.rounds {
            let m = &r.metrics;
            self.rounds.push(ScenarioRow {
                cell: key.cell.clone(),
                n: key.n,
                k: key.k,
                knowledge_graph: key.knowledge_graph,
                mode: key.mode,
                paraphrases: key.paraphrases,
                scenario_id: s.scenario_id.clone(),
                round: m.round,
                ratio: m.candidate.ratio,
                score: m.candidate.score,
                equity: m.candidate.equity,
                avg_interactions: m.avg_interactions,
                violations: m.violations,
            });
        }
    }

    pub fn from_experiment(result: &ExperimentResult) -> Self {
        let mut data = Self::default();
        data.add_experiment(result);
        data
    }

    pub fn add_experiment(&mut self, result: &ExperimentResult) {
        for cell in &result.cells {
            self.push_cell(cell, None);
        }
    }

    pub fn add_robustness(&mut self, result: &RobustnessResult) {
        for run in &result.runs {
            for cell in &run.cells {
                self.push_cell(cell, Some(run.paraphrases));
            }
        }
    }

    pub fn write_csv(&self, dir: &Path) -> Result<(), ReportError> {
        write_rows(&dir.join("scenarios.csv"), &self.scenarios)?;
        write_rows(&dir.join("rounds.csv"), &self.rounds)
    }

    pub fn read_csv(dir: &Path) -> Result<Self, ReportError> {
        Ok(Self {
            scenarios: read_rows(&dir.join("scenarios.csv"))?,
            rounds: read_rows(&dir.join("rounds.csv"))?,
        })
    }
}

fn csv_err(path: &Path, e: impl fmt::Display) -> ReportError {
    ReportError::Csv {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|source| ReportError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, ReportError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    r.deserialize().collect::<Result<Vec<T>, _>>().map_err(|e| csv_err(path, e))
}

/// Per-round aggregate of one metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundSummary {
    pub round: u32,
    pub metric: Metric,
    pub estimate: Estimate,
}

/// Mean percentage change per round relative to round 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendSeries {
    pub metric: Metric,
    pub series: String,
    pub pct_change: Vec<f64>,
    pub half_width: Vec<Option<f64>>,
    pub n_scenarios: Vec<usize>,
    pub initial_mean: f64,
    pub final_mean: f64,
    /// Scenarios left out because their round-1 value was zero.
    pub excluded: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub key: CellKey,
    pub setting: String,
    pub scenarios: usize,
    pub completed: usize,
    pub failure_rate: f64,
    pub per_round: Vec<RoundSummary>,
    /// Final-round ratio, score and equity; interactions averaged over
    /// rounds per scenario.
    pub headline: BTreeMap<Metric, Estimate>,
    pub trends: Vec<TrendSeries>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum TableCell {
    Value(Estimate),
    NotApplicable,
    Missing,
}

impl fmt::Display for TableCell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TableCell::Value(e) => e.fmt(f),
            TableCell::NotApplicable => f.write_str("n/a"),
            TableCell::Missing => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub setting: String,
    pub metric: Metric,
    /// One entry per variant, in [`SummaryTable::variants`] order.
    pub cells: Vec<TableCell>,
}

/// Baseline comparison: settings × metrics × system variants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryTable {
    pub variants: Vec<SessionMode>,
    pub rows: Vec<SummaryRow>,
}

impl SummaryTable {
    pub fn get(&self, setting: &str, metric: Metric, variant: SessionMode) -> Option<&TableCell> {
        let col = self.variants.iter().position(|v| *v == variant)?;
        self.rows
            .iter()
            .find(|r| r.setting == setting && r.metric == metric)
            .map(|r| &r.cells[col])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessRow {
    pub metric: Metric,
    pub cells: Vec<TableCell>,
    /// Sample standard deviation of the per-count means.
    pub std_of_mean: Option<f64>,
}

/// Metrics against the number of paraphrase passes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessTable {
    pub setting: String,
    pub counts: Vec<usize>,
    pub rows: Vec<RobustnessRow>,
}

/// One line of a figure: a cell's trend for every metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Figure {
    pub name: String,
    pub series: Vec<TrendSeries>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub level: f64,
    pub cells: Vec<CellReport>,
    pub summary: SummaryTable,
    pub figures: Vec<Figure>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub robustness: Option<RobustnessTable>,
}

fn group<T>(items: &[T], key: impl Fn(&T) -> CellKey) -> Vec<(CellKey, Vec<&T>)> {
    let mut out: Vec<(CellKey, Vec<&T>)> = Vec::new();
    for item in items {
        let k = key(item);
        match out.iter_mut().find(|(g, _)| *g == k) {
            Some((_, v)) => v.push(item),
            None => out.push((k, vec![item])),
        }
    }
    out
}

fn by_scenario<'a>(rows: &[&'a ScenarioRow]) -> Vec<Vec<&'a ScenarioRow>> {
    let mut out: Vec<(String, Vec<&ScenarioRow>)> = Vec::new();
    for r in rows {
        match out.iter_mut().find(|(id, _)| *id == r.scenario_id) {
            Some((_, v)) => v.push(r),
            None => out.push((r.scenario_id.clone(), vec![r])),
        }
    }
    for (_, v) in &mut out {
        v.sort_by_key(|r| r.round);
    }
    out.into_iter().map(|(_, v)| v).collect()
}

fn trend(metric: Metric, series: &str, scenarios: &[Vec<&ScenarioRow>], level: f64) -> Option<TrendSeries> {
    let mut changes: Vec<Vec<f64>> = Vec::new();
    let mut excluded = 0;
    let mut initial = Vec::new();
    let mut last = Vec::new();
    for rows in scenarios {
        let values: Option<Vec<f64>> = rows.iter().map(|r| metric.of(r)).collect();
        let Some(values) = values else { continue };
        if values.is_empty() {
            continue;
        }
        initial.push(values[0]);
        last.push(*values.last().expect("non-empty"));
        match pct_change(&values) {
            Some(c) => changes.push(c),
            None => {
                log::debug!("{series}: {} excluded from {} trend, zero at round 1", rows[0].scenario_id, metric.as_str());
                excluded += 1;
            }
        }
    }
    if initial.is_empty() {
        return None;
    }
    if excluded > 0 {
        log::info!("{series}: {excluded} scenario(s) left out of the {} trend", metric.as_str());
    }
    let rounds = changes.iter().map(Vec::len).max().unwrap_or(0);
    let mut pct = Vec::with_capacity(rounds);
    let mut hw = Vec::with_capacity(rounds);
    let mut counts = Vec::with_capacity(rounds);
    for t in 0..rounds {
        let at: Vec<f64> = changes.iter().filter_map(|c| c.get(t).copied()).collect();
        let e = Estimate::of(&at, level).expect("non-empty");
        pct.push(e.mean);
        hw.push(e.half_width);
        counts.push(at.len());
    }
    Some(TrendSeries {
        metric,
        series: series.to_string(),
        pct_change: pct,
        half_width: hw,
        n_scenarios: counts,
        initial_mean: mean(&initial),
        final_mean: mean(&last),
        excluded,
    })
}

fn cell_report(key: CellKey, status: &[&ScenarioStatusRow], rows: &[&ScenarioRow], level: f64) -> CellReport {
    let completed_ids: Vec<&str> = status
        .iter()
        .filter(|s| s.completed)
        .map(|s| s.scenario_id.as_str())
        .collect();
    let rows: Vec<&ScenarioRow> = rows
        .iter()
        .copied()
        .filter(|r| completed_ids.contains(&r.scenario_id.as_str()))
        .collect();
    let scenarios = by_scenario(&rows);

    let max_round = rows.iter().map(|r| r.round).max().unwrap_or(0);
    let mut per_round = Vec::new();
    for t in 1..=max_round {
        for metric in Metric::ALL {
            let values: Vec<f64> = rows.iter().filter(|r| r.round == t).filter_map(|r| metric.of(r)).collect();
            if let Some(estimate) = Estimate::of(&values, level) {
                per_round.push(RoundSummary {
                    round: t,
                    metric,
                    estimate,
                });
            }
        }
    }

    let mut headline = BTreeMap::new();
    for metric in Metric::ALL {
        let values: Vec<f64> = scenarios
            .iter()
            .filter_map(|rows| {
                if metric == Metric::Interactions {
                    let v: Vec<f64> = rows.iter().filter_map(|r| r.avg_interactions).collect();
                    (!v.is_empty()).then(|| mean(&v))
                } else {
                    rows.last().and_then(|r| metric.of(r))
                }
            })
            .collect();
        if let Some(e) = Estimate::of(&values, level) {
            headline.insert(metric, e);
        }
    }

    let trends = Metric::ALL
        .into_iter()
        .filter_map(|m| trend(m, &key.cell, &scenarios, level))
        .collect();
    let total = status.len();
    CellReport {
        setting: key.setting(),
        key,
        scenarios: total,
        completed: completed_ids.len(),
        failure_rate: if total == 0 {
            0.0
        } else {
            (total - completed_ids.len()) as f64 / total as f64
        },
        per_round,
        headline,
        trends,
    }
}

fn summary_table(cells: &[CellReport]) -> SummaryTable {
    let variants = vec![
        SessionMode::SingleRoundNonConversational,
        SessionMode::SingleRoundConversational,
        SessionMode::Full,
    ];
    let mut settings: Vec<String> = Vec::new();
    for c in cells.iter().filter(|c| c.key.paraphrases.is_none()) {
        if !settings.contains(&c.setting) {
            settings.push(c.setting.clone());
        }
    }
    let mut rows = Vec::new();
    for setting in &settings {
        for metric in Metric::ALL {
            let cells = variants
                .iter()
                .map(|&v| {
                    if metric == Metric::Interactions && !v.is_conversational() {
                        return TableCell::NotApplicable;
                    }
                    cells
                        .iter()
                        .find(|c| c.key.paraphrases.is_none() && &c.setting == setting && c.key.mode == v)
                        .and_then(|c| c.headline.get(&metric))
                        .map(|e| TableCell::Value(e.scaled(metric.display_factor())))
                        .unwrap_or(TableCell::Missing)
                })
                .collect();
            rows.push(SummaryRow {
                setting: setting.clone(),
                metric,
                cells,
            });
        }
    }
    SummaryTable { variants, rows }
}

fn figures(cells: &[CellReport]) -> Vec<Figure> {
    let full: Vec<&CellReport> = cells
        .iter()
        .filter(|c| c.key.paraphrases.is_none() && c.key.mode == SessionMode::Full)
        .collect();
    let mut figs = Vec::new();
    let mut add = |name: &str, pick: &dyn Fn(&CellKey) -> bool, label: &dyn Fn(&CellKey) -> String| {
        let mut picked: Vec<&&CellReport> = full.iter().filter(|c| pick(&c.key)).collect();
        picked.sort_by_key(|c| (c.key.n, c.key.k, c.key.knowledge_graph));
        picked.dedup_by_key(|c| (c.key.n, c.key.k, c.key.knowledge_graph));
        if picked.len() < 2 {
            return;
        }
        let series = picked
            .iter()
            .flat_map(|c| {
                c.trends.iter().map(|t| TrendSeries {
                    series: label(&c.key),
                    ..t.clone()
                })
            })
            .collect();
        figs.push(Figure {
            name: name.to_string(),
            series,
        });
    };
    add("n_sweep", &|k| k.k == 2 && !k.knowledge_graph, &|k| format!("n = {}", k.n));
    add("k_sweep", &|k| k.n == 5 && !k.knowledge_graph, &|k| format!("K = {}", k.k));
    add("knowledge_graph", &|k| k.n == 5 && k.k == 2, &|k| {
        if k.knowledge_graph {
            "with knowledge graph".to_string()
        } else {
            "without knowledge graph".to_string()
        }
    });
    figs
}

fn robustness_table(cells: &[CellReport]) -> Option<RobustnessTable> {
    let mut runs: Vec<&CellReport> = cells.iter().filter(|c| c.key.paraphrases.is_some()).collect();
    if runs.is_empty() {
        return None;
    }
    runs.sort_by_key(|c| c.key.paraphrases);
    let counts = runs.iter().filter_map(|c| c.key.paraphrases).collect();
    let rows = [Metric::SatisfactionRatio, Metric::SatisfactionScore, Metric::EquityScore]
        .into_iter()
        .map(|metric| {
            let estimates: Vec<Option<Estimate>> = runs
                .iter()
                .map(|c| c.headline.get(&metric).map(|e| e.scaled(metric.display_factor())))
                .collect();
            let means: Vec<f64> = estimates.iter().flatten().map(|e| e.mean).collect();
            RobustnessRow {
                metric,
                cells: estimates
                    .into_iter()
                    .map(|e| e.map(TableCell::Value).unwrap_or(TableCell::Missing))
                    .collect(),
                std_of_mean: (means.len() >= 2).then(|| sample_std(&means)),
            }
        })
        .collect();
    Some(RobustnessTable {
        setting: runs[0].setting.clone(),
        counts,
        rows,
    })
}

impl Report {
    /// Builds the full report from flat per-scenario data.
    pub fn build(data: &ReportData, level: f64) -> Result<Self, ReportError> {
        if data.scenarios.is_empty() {
            return Err(ReportError::Empty);
        }
        if !(level > 0.0 && level < 1.0) {
            return Err(ReportError::Level(level));
        }
        let rows_by_cell = group(&data.rounds, ScenarioRow::key);
        let cells: Vec<CellReport> = group(&data.scenarios, ScenarioStatusRow::key)
            .into_iter()
            .map(|(key, status)| {
                let rows = rows_by_cell
                    .iter()
                    .find(|(k, _)| *k == key)
                    .map(|(_, r)| r.as_slice())
                    .unwrap_or(&[]);
                cell_report(key, &status, rows, level)
            })
            .collect();
        Ok(Report {
            level,
            summary: summary_table(&cells),
            figures: figures(&cells),
            robustness: robustness_table(&cells),
            cells,
        })
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, ReportError> {
        Ok(serde_json::from_str(text)?)
    }
}

fn create_dir(path: &Path) -> Result<(), ReportError> {
    fs::create_dir_all(path).map_err(|source| ReportError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn write_text(path: &Path, text: &str) -> Result<(), ReportError> {
    fs::write(path, text).map_err(|source| ReportError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn write_table(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(header).map_err(|e| csv_err(path, e))?;
    for r in rows {
        w.write_record(r).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|source| ReportError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Writes the report under `dir`:
/// `summary.json`, `tables/{scenarios,rounds,summary,per_round,robustness}.csv`
/// and `plots/<figure>.csv`. Returns the files written.
pub fn emit(report: &Report, data: &ReportData, dir: &Path) -> Result<Vec<PathBuf>, ReportError> {
    let tables = dir.join("tables");
    let plots = dir.join("plots");
    create_dir(&tables)?;
    create_dir(&plots)?;
    let mut written = Vec::new();

    let summary = dir.join("summary.json");
    write_text(&summary, &report.to_json())?;
    written.push(summary);

    data.write_csv(&tables)?;
    written.push(tables.join("scenarios.csv"));
    written.push(tables.join("rounds.csv"));

    let mut header = vec!["setting".to_string(), "metric".to_string()];
    header.extend(report.summary.variants.iter().map(|v| v.label().to_string()));
    let rows: Vec<Vec<String>> = report
        .summary
        .rows
        .iter()
        .map(|r| {
            let mut row = vec![r.setting.clone(), r.metric.title().to_string()];
            row.extend(r.cells.iter().map(|c| c.to_string()));
            row
        })
        .collect();
    let path = tables.join("summary.csv");
    write_table(&path, &header, &rows)?;
    written.push(path);

    let header: Vec<String> = ["cell", "mode", "paraphrases", "round", "metric", "mean", "half_width", "count"]
        .map(String::from)
        .to_vec();
    let rows: Vec<Vec<String>> = report
        .cells
        .iter()
        .flat_map(|c| {
            c.per_round.iter().map(move |r| {
                vec![
                    c.key.cell.clone(),
                    c.key.mode.to_string(),
                    c.key.paraphrases.map(|p| p.to_string()).unwrap_or_default(),
                    r.round.to_string(),
                    r.metric.as_str().to_string(),
                    r.estimate.mean.to_string(),
                    opt(r.estimate.half_width),
                    r.estimate.count.to_string(),
                ]
            })
        })
        .collect();
    let path = tables.join("per_round.csv");
    write_table(&path, &header, &rows)?;
    written.push(path);

    if let Some(rob) = &report.robustness {
        let mut header = vec!["metric".to_string()];
        header.extend(rob.counts.iter().map(|c| c.to_string()));
        header.push("std_of_mean".to_string());
        let rows: Vec<Vec<String>> = rob
            .rows
            .iter()
            .map(|r| {
                let mut row = vec![r.metric.title().to_string()];
                row.extend(r.cells.iter().map(|c| c.to_string()));
                row.push(r.std_of_mean.map(|s| format!("{s:.3}")).unwrap_or_default());
                row
            })
            .collect();
        let path = tables.join("robustness.csv");
        write_table(&path, &header, &rows)?;
        written.push(path);
    }

    for fig in &report.figures {
        let header: Vec<String> = ["series", "metric", "round", "pct_change", "half_width", "n_scenarios"]
            .map(String::from)
            .to_vec();
        let rows: Vec<Vec<String>> = fig
            .series
            .iter()
            .flat_map(|s| {
                (0..s.pct_change.len()).map(move |t| {
                    vec![
                        s.series.clone(),
                        s.metric.as_str().to_string(),
                        (t + 1).to_string(),
                        s.pct_change[t].to_string(),
                        opt(s.half_width[t]),
                        s.n_scenarios[t].to_string(),
                    ]
                })
            })
            .collect();
        let path = plots.join(format!("{}.csv", fig.name));
        write_table(&path, &header, &rows)?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pct_change_examples() {
        assert_eq!(pct_change(&[2.0, 1.0]).unwrap(), vec![0.0, -50.0]);
        assert_eq!(pct_change(&[1.0, 1.5, 2.0]).unwrap(), vec![0.0, 50.0, 100.0]);
        assert!(pct_change(&[0.0, 1.0]).is_none());
        assert!(pct_change(&[]).is_none());
    }

    #[test]
    fn equal_values_have_zero_width() {
        let (m, h) = mean_ci(&[0.5; 20], DEFAULT_LEVEL).unwrap();
        assert_eq!(m, 0.5);
        assert_eq!(h, 0.0);
        assert!(mean_ci(&[1.0], DEFAULT_LEVEL).is_err());
    }

    #[test]
    fn estimate_display() {
        let e = Estimate {
            mean: 78.333,
            half_width: Some(6.149),
            count: 20,
        };
        assert_eq!(e.to_string(), "78.33 ± 6.15");
        assert_eq!(TableCell::NotApplicable.to_string(), "n/a");
    }
}
