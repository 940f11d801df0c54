//! Score matrices and the per-option metrics derived from them.
//!
//! Every option `j` gets one Likert value `π[j][i] ∈ {0,1,2,3}` per member
//! `i`. From a row of those values:
//!
//! * satisfaction ratio: fraction of members with `π > 0`;
//! * satisfaction score: mean of `π`;
//! * equity score: Gini coefficient of `π`, or 1 when nobody is satisfied.
//!
//! The decision candidate of a round is the option with the highest ratio,
//! ties broken by score, then by the lowest option index.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::model::MemberId;

pub const MAX_LIKERT: u8 = 3;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("{satisfied} satisfied preferences out of {total}")]
    TooManySatisfied { satisfied: usize, total: usize },
    #[error("score matrix needs at least one option and one member")]
    Empty,
    #[error("score matrix is {rows}x{cols} but has {options} option ids and {members} member ids")]
    Shape {
        rows: usize,
        cols: usize,
        options: usize,
        members: usize,
    },
    #[error("score {value} at option {option}, member {member} is outside 0..=3")]
    OutOfRange {
        option: usize,
        member: usize,
        value: u8,
    },
    #[error("malformed evaluator output: {0}")]
    Malformed(String),
}

/// A Likert value with a flag for the degenerate "no preferences" case.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LikertScore {
    pub value: u8,
    /// Set when the member stated no preferences; the value is then 3.
    pub vacuous: bool,
}

/// Maps "k of m preferences satisfied" onto 0–3.
///
/// 0 for none, 3 for all, 2 for at least half (exactly half included),
/// 1 otherwise. A member without preferences is vacuously fully satisfied.
pub fn likert_score(num_satisfied: usize, num_prefs: usize) -> Result<LikertScore, MetricsError> {
    if num_satisfied > num_prefs {
        return Err(MetricsError::TooManySatisfied {
            satisfied: num_satisfied,
            total: num_prefs,
        });
    }
    let value = if num_prefs == 0 {
        return Ok(LikertScore {
            value: MAX_LIKERT,
            vacuous: true,
        });
    } else if num_satisfied == 0 {
        0
    } else if num_satisfied == num_prefs {
        3
    } else if 2 * num_satisfied >= num_prefs {
        2
    } else {
        1
    };
    Ok(LikertScore {
        value,
        vacuous: false,
    })
}

/// Fraction of members with a positive score. `row` must be non-empty.
pub fn satisfaction_ratio(row: &[u8]) -> f64 {
    assert!(!row.is_empty(), "satisfaction_ratio of an empty row");
    satisfied_count(row) as f64 / row.len() as f64
}

pub fn satisfied_count(row: &[u8]) -> usize {
    row.iter().filter(|&&v| v > 0).count()
}

/// Mean Likert value. `row` must be non-empty.
pub fn satisfaction_score(row: &[u8]) -> f64 {
    assert!(!row.is_empty(), "satisfaction_score of an empty row");
    row_sum(row) as f64 / row.len() as f64
}

fn row_sum(row: &[u8]) -> u64 {
    row.iter().map(|&v| u64::from(v)).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GiniMode {
    /// Mean absolute difference over twice the mean: `Σ|a−b| / (2·n·Σπ)`.
    #[default]
    Standard,
    /// The `2·n²·Σπ` denominator, i.e. the standard value divided by `n`.
    NSquared,
}

/// Gini coefficient of `row`, or 1 when every value is zero.
///
/// Uses the sorted form `Σ (2k − n − 1)·x₍ₖ₎ / (n·Σx)`, which equals the
/// pairwise definition.
pub fn equity_score(row: &[u8], mode: GiniMode) -> f64 {
    assert!(!row.is_empty(), "equity_score of an empty row");
    let total = row_sum(row);
    if total == 0 {
        return 1.0;
    }
    let n = row.len() as i64;
    let mut sorted = row.to_vec();
    sorted.sort_unstable();
    let weighted: i64 = sorted
        .iter()
        .enumerate()
        .map(|(k, &x)| (2 * (k as i64 + 1) - n - 1) * i64::from(x))
        .sum();
    let standard = weighted as f64 / (n as f64 * total as f64);
    match mode {
        GiniMode::Standard => standard,
        GiniMode::NSquared => standard / n as f64,
    }
}

/// Ratio, score and equity of one option.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptionMetrics {
    pub ratio: f64,
    pub score: f64,
    pub equity: f64,
}

impl OptionMetrics {
    pub fn of_row(row: &[u8], mode: GiniMode) -> Self {
        OptionMetrics {
            ratio: satisfaction_ratio(row),
            score: satisfaction_score(row),
            equity: equity_score(row, mode),
        }
    }
}

/// `K × n` grid of Likert values, rows are options.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoreMatrix {
    pub option_ids: Vec<String>,
    pub member_ids: Vec<MemberId>,
    pub scores: Vec<Vec<u8>>,
}

impl ScoreMatrix {
    pub fn new(
        option_ids: Vec<String>,
        member_ids: Vec<MemberId>,
        scores: Vec<Vec<u8>>,
    ) -> Result<Self, MetricsError> {
        if option_ids.is_empty() || member_ids.is_empty() {
            return Err(MetricsError::Empty);
        }
        let bad_shape = scores.len() != option_ids.len()
            || scores.iter().any(|r| r.len() != member_ids.len());
        if bad_shape {
            return Err(MetricsError::Shape {
                rows: scores.len(),
                cols: scores.first().map_or(0, Vec::len),
                options: option_ids.len(),
                members: member_ids.len(),
            });
        }
        for (j, row) in scores.iter().enumerate() {
            for (i, &v) in row.iter().enumerate() {
                if v > MAX_LIKERT {
                    return Err(MetricsError::OutOfRange {
                        option: j,
                        member: i,
                        value: v,
                    });
                }
            }
        }
        Ok(ScoreMatrix {
            option_ids,
            member_ids,
            scores,
        })
    }

    pub fn num_options(&self) -> usize {
        self.scores.len()
    }

    pub fn num_members(&self) -> usize {
        self.member_ids.len()
    }

    pub fn row(&self, option: usize) -> &[u8] {
        &self.scores[option]
    }

    pub fn option_metrics(&self, mode: GiniMode) -> Vec<OptionMetrics> {
        self.scores.iter().map(|r| OptionMetrics::of_row(r, mode)).collect()
    }
}

/// Index of the decision candidate: highest satisfaction ratio, then highest
/// satisfaction score, then lowest index.
///
/// Comparisons use integer counts and sums, so equal ratios and scores tie
/// exactly.
pub fn select_candidate(matrix: &ScoreMatrix) -> usize {
    let key = |row: &[u8]| (satisfied_count(row), row_sum(row));
    let mut best = 0;
    for j in 1..matrix.num_options() {
        if key(matrix.row(j)).cmp(&key(matrix.row(best))) == Ordering::Greater {
            best = j;
        }
    }
    best
}

/// Everything measured in one round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundMetrics {
    pub round: u32,
    pub options: Vec<OptionMetrics>,
    pub candidate_index: usize,
    pub candidate: OptionMetrics,
    /// Mean number of member turns; `None` when the round had no
    /// conversations.
    pub avg_interactions: Option<f64>,
    pub violations: usize,
}

impl RoundMetrics {
    pub fn compute(
        round: u32,
        matrix: &ScoreMatrix,
        mode: GiniMode,
        avg_interactions: Option<f64>,
        violations: usize,
    ) -> Self {
        let options = matrix.option_metrics(mode);
        let candidate_index = select_candidate(matrix);
        RoundMetrics {
            round,
            candidate: options[candidate_index],
            options,
            candidate_index,
            avg_interactions,
            violations,
        }
    }
}

/// A repairable problem found while reading evaluator output.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "issue", rename_all = "snake_case")]
pub enum ScoreIssue {
    UnknownOption { option: String },
    DuplicateOption { option: String },
    OptionNotScored { option: String },
    UnknownMember { option: String, user: String },
    DuplicateScore { option: String, user: String },
    OutOfRange { option: String, user: String, raw: i64, clamped: u8 },
}

/// The option a score entry may refer to: its id (`option1`) or its text.
#[derive(Debug, Clone)]
pub struct OptionKey {
    pub id: String,
    pub suggestion: String,
}

fn normalize(s: &str) -> String {
    s.split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .trim_end_matches('.')
        .to_lowercase()
}

fn squash(s: &str) -> String {
    s.chars().filter(|c| !c.is_whitespace() && *c != '_').collect::<String>().to_lowercase()
}

fn resolve_option(label: &Value, options: &[OptionKey]) -> Option<usize> {
    match label {
        Value::Number(n) => {
            let k = n.as_u64()? as usize;
            (1..=options.len()).contains(&k).then(|| k - 1)
        }
        Value::String(s) => {
            let sq = squash(s);
            if let Some(j) = options.iter().position(|o| squash(&o.id) == sq) {
                return Some(j);
            }
            let norm = normalize(s);
            if let Some(j) = options.iter().position(|o| normalize(&o.suggestion) == norm) {
                return Some(j);
            }
            // "option 2" / "Option2" without matching ids
            let digits = sq.strip_prefix("option")?;
            let k: usize = digits.parse().ok()?;
            (1..=options.len()).contains(&k).then(|| k - 1)
        }
        _ => None,
    }
}

fn label_text(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn parse_score_value(v: &Value) -> Result<i64, String> {
    match v {
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                Ok(i)
            } else {
                let f = n.as_f64().unwrap_or(f64::NAN);
                if f.fract() == 0.0 && f.is_finite() {
                    Ok(f as i64)
                } else {
                    Err(format!("non-integer score {n}"))
                }
            }
        }
        Value::String(s) => s
            .trim()
            .parse::<i64>()
            .map_err(|_| format!("non-numeric score {s:?}")),
        other => Err(format!("score must be an integer, got {other}")),
    }
}

/// Converts evaluator JSON into a [`ScoreMatrix`].
///
/// Accepted shapes: a list of `{"option", "scores"}` entries, a single such
/// entry, or an object keyed by option whose values are either the score
/// list or an object holding it. A member missing from an option's list
/// scores 0. Unknown options or users are dropped and out-of-range scores
/// clamped, each with a [`ScoreIssue`]; non-integer scores and unusable
/// structure are errors.
pub fn parse_scores(
    value: &Value,
    options: &[OptionKey],
    members: &[MemberId],
) -> Result<(ScoreMatrix, Vec<ScoreIssue>), MetricsError> {
    let mut entries: Vec<(Value, &Value)> = Vec::new();
    match value {
        Value::Array(items) => {
            for item in items {
                let obj = item
                    .as_object()
                    .ok_or_else(|| MetricsError::Malformed(format!("entry is not an object: {item}")))?;
                let label = obj
                    .get("option")
                    .ok_or_else(|| MetricsError::Malformed("entry without \"option\"".into()))?;
                let scores = obj
                    .get("scores")
                    .ok_or_else(|| MetricsError::Malformed("entry without \"scores\"".into()))?;
                entries.push((label.clone(), scores));
            }
        }
        Value::Object(map) if map.contains_key("scores") => {
            let label = map
                .get("option")
                .ok_or_else(|| MetricsError::Malformed("entry without \"option\"".into()))?;
            entries.push((label.clone(), &map["scores"]));
        }
        Value::Object(map) => {
            for (key, v) in map {
                let scores = match v {
                    Value::Object(inner) => inner.get("scores").ok_or_else(|| {
                        MetricsError::Malformed(format!("option {key:?} has no \"scores\""))
                    })?,
                    list @ Value::Array(_) => list,
                    other => {
                        return Err(MetricsError::Malformed(format!(
                            "option {key:?} maps to {other}"
                        )))
                    }
                };
                entries.push((Value::String(key.clone()), scores));
            }
        }
        other => return Err(MetricsError::Malformed(format!("unexpected top-level value {other}"))),
    }

    let mut issues = Vec::new();
    let mut grid = vec![vec![0u8; members.len()]; options.len()];
    let mut seen_option = vec![false; options.len()];
    for (label, scores) in entries {
        let Some(j) = resolve_option(&label, options) else {
            issues.push(ScoreIssue::UnknownOption {
                option: label_text(&label),
            });
            continue;
        };
        let option = options[j].id.clone();
        if seen_option[j] {
            issues.push(ScoreIssue::DuplicateOption { option });
            continue;
        }
        seen_option[j] = true;
        let list = scores
            .as_array()
            .ok_or_else(|| MetricsError::Malformed(format!("scores of {option} are not a list")))?;
        let mut seen_user = vec![false; members.len()];
        for item in list {
            let obj = item
                .as_object()
                .ok_or_else(|| MetricsError::Malformed(format!("score item is not an object: {item}")))?;
            let user = obj
                .get("user")
                .map(label_text)
                .ok_or_else(|| MetricsError::Malformed("score item without \"user\"".into()))?;
            let raw = obj
                .get("score")
                .ok_or_else(|| MetricsError::Malformed("score item without \"score\"".into()))
                .and_then(|v| parse_score_value(v).map_err(MetricsError::Malformed))?;
            let Some(i) = members.iter().position(|m| normalize(m.as_str()) == normalize(&user)) else {
                issues.push(ScoreIssue::UnknownMember {
                    option: option.clone(),
                    user,
                });
                continue;
            };
            if seen_user[i] {
                issues.push(ScoreIssue::DuplicateScore {
                    option: option.clone(),
                    user,
                });
                continue;
            }
            seen_user[i] = true;
            let clamped = raw.clamp(0, i64::from(MAX_LIKERT)) as u8;
            if i64::from(clamped) != raw {
                issues.push(ScoreIssue::OutOfRange {
                    option: option.clone(),
                    user,
                    raw,
                    clamped,
                });
            }
            grid[j][i] = clamped;
        }
    }
    for (j, seen) in seen_option.iter().enumerate() {
        if !seen {
            issues.push(ScoreIssue::OptionNotScored {
                option: options[j].id.clone(),
            });
        }
    }
    let matrix = ScoreMatrix::new(
        options.iter().map(|o| o.id.clone()).collect(),
        members.to_vec(),
        grid,
    )?;
    Ok((matrix, issues))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use serde_json::json;

    fn pairwise_gini(row: &[u8]) -> f64 {
        let total: f64 = row.iter().map(|&v| f64::from(v)).sum();
        if total == 0.0 {
            return 1.0;
        }
        let mut diff = 0.0;
        for &a in row {
            for &b in row {
                diff += (f64::from(a) - f64::from(b)).abs();
            }
        }
        diff / (2.0 * row.len() as f64 * total)
    }

    fn matrix(rows: &[&[u8]]) -> ScoreMatrix {
        let n = rows[0].len();
        ScoreMatrix::new(
            (0..rows.len()).map(|j| format!("option{}", j + 1)).collect(),
            (0..n).map(|i| MemberId(format!("Member {}", i + 1))).collect(),
            rows.iter().map(|r| r.to_vec()).collect(),
        )
        .unwrap()
    }

    #[test]
    fn likert_bands() {
        assert_eq!(likert_score(0, 4).unwrap().value, 0);
        assert_eq!(likert_score(1, 4).unwrap().value, 1);
        assert_eq!(likert_score(2, 4).unwrap().value, 2);
        assert_eq!(likert_score(3, 4).unwrap().value, 2);
        assert_eq!(likert_score(4, 4).unwrap().value, 3);
        assert_eq!(likert_score(1, 2).unwrap().value, 2);
        assert_eq!(likert_score(1, 3).unwrap().value, 1);
        let vacuous = likert_score(0, 0).unwrap();
        assert_eq!((vacuous.value, vacuous.vacuous), (3, true));
        assert!(likert_score(5, 4).is_err());
    }

    #[test]
    fn ratio_score_examples() {
        assert_eq!(satisfaction_ratio(&[0, 0, 0]), 0.0);
        assert_eq!(satisfaction_ratio(&[3, 3, 3]), 1.0);
        assert_eq!(satisfaction_ratio(&[2, 0, 1, 0]), 0.5);
        assert_eq!(satisfaction_score(&[0, 0, 0]), 0.0);
        assert_eq!(satisfaction_score(&[3, 3, 3]), 3.0);
        assert_eq!(satisfaction_score(&[2, 0, 1]), 1.0);
    }

    #[test]
    fn equity_examples() {
        assert_eq!(equity_score(&[0, 0, 0], GiniMode::Standard), 1.0);
        assert_eq!(equity_score(&[0, 0, 0], GiniMode::NSquared), 1.0);
        assert_eq!(equity_score(&[2, 2, 2], GiniMode::Standard), 0.0);
        assert_eq!(equity_score(&[2, 2, 2], GiniMode::NSquared), 0.0);
        assert_abs_diff_eq!(equity_score(&[3, 0, 0], GiniMode::Standard), 12.0 / 18.0, epsilon = 1e-12);
        assert_abs_diff_eq!(equity_score(&[3, 0, 0], GiniMode::NSquared), 12.0 / 54.0, epsilon = 1e-12);
    }

    #[test]
    fn candidate_examples() {
        assert_eq!(select_candidate(&matrix(&[&[0, 0, 0]])), 0);
        assert_eq!(select_candidate(&matrix(&[&[1, 0, 0], &[0, 2, 2], &[3, 1, 0]])), 1);
        assert_eq!(select_candidate(&matrix(&[&[1, 1, 0], &[3, 2, 0]])), 1);
        // full tie → lowest index
        assert_eq!(select_candidate(&matrix(&[&[1, 2, 0], &[2, 1, 0], &[0, 2, 1]])), 0);
    }

    #[test]
    fn matrix_validation() {
        let ids = || vec!["option1".to_string()];
        let members = || vec![MemberId::from("A")];
        assert_eq!(ScoreMatrix::new(vec![], members(), vec![]), Err(MetricsError::Empty));
        assert!(matches!(
            ScoreMatrix::new(ids(), members(), vec![vec![1, 2]]),
            Err(MetricsError::Shape { .. })
        ));
        assert!(matches!(
            ScoreMatrix::new(ids(), members(), vec![vec![4]]),
            Err(MetricsError::OutOfRange { .. })
        ));
    }

    fn keys() -> Vec<OptionKey> {
        vec![
            OptionKey { id: "option1".into(), suggestion: "Feb 16, 10am".into() },
            OptionKey { id: "option2".into(), suggestion: "Feb 16, 2pm".into() },
        ]
    }

    fn members() -> Vec<MemberId> {
        vec!["Member 1".into(), "Member 2".into(), "Member 3".into()]
    }

    #[test]
    fn parse_list_form_with_missing_member() {
        let v = json!([
            {"option": "option1", "scores": [
                {"user": "Member 1", "score": 3, "reasons": ["morning"]},
                {"user": "Member 2", "score": 2, "reasons": []}]},
            {"option": "Feb 16, 2pm", "scores": [{"user": "member 3", "score": "1"}]}
        ]);
        let (m, issues) = parse_scores(&v, &keys(), &members()).unwrap();
        assert_eq!(m.scores, vec![vec![3, 2, 0], vec![0, 0, 1]]);
        assert!(issues.is_empty());
    }

    #[test]
    fn parse_keyed_form_with_repairs() {
        let v = json!({
            "option1": {"scores": [{"user": "Member 9", "score": 2}, {"user": "Member 1", "score": 7}]},
            "Option 3": [{"user": "Member 1", "score": 1}]
        });
        let (m, issues) = parse_scores(&v, &keys(), &members()).unwrap();
        assert_eq!(m.scores, vec![vec![3, 0, 0], vec![0, 0, 0]]);
        assert_eq!(issues.len(), 4, "{issues:?}");
        assert!(issues.contains(&ScoreIssue::OptionNotScored { option: "option2".into() }));
    }

    #[test]
    fn parse_rejects_fractional_scores() {
        let v = json!([{"option": "option1", "scores": [{"user": "Member 1", "score": 2.5}]}]);
        assert!(matches!(parse_scores(&v, &keys(), &members()), Err(MetricsError::Malformed(_))));
        assert!(parse_scores(&json!("nope"), &keys(), &members()).is_err());
    }

    proptest! {
        #[test]
        fn sorted_gini_matches_pairwise(row in prop::collection::vec(0u8..=3, 1..=8)) {
            let fast = equity_score(&row, GiniMode::Standard);
            prop_assert!((fast - pairwise_gini(&row)).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&fast));
        }

        #[test]
        fn metrics_permutation_invariant(mut row in prop::collection::vec(0u8..=3, 1..=8), seed in any::<u64>()) {
            let before = OptionMetrics::of_row(&row, GiniMode::Standard);
            let k = (seed as usize) % row.len();
            row.rotate_left(k);
            row.reverse();
            let after = OptionMetrics::of_row(&row, GiniMode::Standard);
            prop_assert_eq!(before.ratio, after.ratio);
            prop_assert!((before.score - after.score).abs() < 1e-12);
            prop_assert!((before.equity - after.equity).abs() < 1e-12);
        }

        #[test]
        fn likert_monotone(total in 1usize..20) {
            let values: Vec<u8> = (0..=total).map(|k| likert_score(k, total).unwrap().value).collect();
            prop_assert!(values.windows(2).all(|w| w[0] <= w[1]));
        }

        #[test]
        fn gini_zero_iff_equal(row in prop::collection::vec(0u8..=3, 1..=8)) {
            prop_assume!(row.iter().any(|&v| v > 0));
            let g = equity_score(&row, GiniMode::Standard);
            let all_equal = row.iter().all(|&v| v == row[0]);
            prop_assert_eq!(g.abs() < 1e-12, all_equal);
        }

        #[test]
        fn scaling_preserves_ratio_and_candidate(
            rows in prop::collection::vec(prop::collection::vec(0u8..=1, 3), 1..5),
            factor in 1u8..=3,
        ) {
            // Scaling binary scores by a positive factor keeps them in 0..=3.
            let base = ScoreMatrix::new(
                (0..rows.len()).map(|j| format!("o{j}")).collect(),
                (0..3).map(|i| MemberId(format!("m{i}"))).collect(),
                rows.clone(),
            ).unwrap();
            let scaled_rows: Vec<Vec<u8>> = rows.iter().map(|r| r.iter().map(|v| v * factor).collect()).collect();
            let scaled = ScoreMatrix { scores: scaled_rows, ..base.clone() };
            prop_assert_eq!(select_candidate(&base), select_candidate(&scaled));
            for j in 0..rows.len() {
                prop_assert_eq!(satisfaction_ratio(base.row(j)), satisfaction_ratio(scaled.row(j)));
            }
        }
    }
}
