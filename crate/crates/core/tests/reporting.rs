use proptest::prelude::*;
use quorum::harness::{run_experiment, run_robustness, Environment, ExperimentPlan, GridCell, RunOptions};
use quorum::protocol::SessionMode;
use quorum::reporting::{emit, mean_ci, t_critical, Metric, Report, ReportData, TableCell, DEFAULT_LEVEL};
use quorum::sim::SimulatedBackend;

/// P(|T| < t) for integer degrees of freedom, from the finite
/// trigonometric series in θ = atan(t/√ν).
fn t_two_sided(t: f64, df: u32) -> f64 {
    let theta = (t / (df as f64).sqrt()).atan();
    let (s, c) = theta.sin_cos();
    let c2 = c * c;
    let (mut sum, mut term) = (1.0, 1.0);
    if df % 2 == 1 {
        for k in 1..=(df.saturating_sub(3) / 2) {
            term *= (2 * k) as f64 / (2 * k + 1) as f64 * c2;
            sum += term;
        }
        let tail = if df == 1 { 0.0 } else { s * c * sum };
        2.0 / std::f64::consts::PI * (theta + tail)
    } else {
        for k in 1..=((df - 2) / 2) {
            term *= (2 * k - 1) as f64 / (2 * k) as f64 * c2;
            sum += term;
        }
        s * sum
    }
}

fn t_oracle(df: u32, level: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, 1000.0);
    for _ in 0..200 {
        let mid = (lo + hi) / 2.0;
        if t_two_sided(mid, df) < level {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo + hi) / 2.0
}

#[test]
fn t_critical_matches_tables_and_quadrature() {
    let t19 = t_critical(19.0, 0.95).unwrap();
    let t1 = t_critical(1.0, 0.95).unwrap();
    assert_eq!((t19 * 1000.0).round() / 1000.0, 2.093);
    assert_eq!((t1 * 1000.0).round() / 1000.0, 12.706);
    for df in [1, 2, 3, 4, 5, 10, 19, 30, 99] {
        let got = t_critical(df as f64, 0.95).unwrap();
        let want = t_oracle(df, 0.95);
        assert!((got - want).abs() < 1e-6, "df={df}: {got} vs {want}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]
    #[test]
    fn mean_ci_matches_direct_formula(values in prop::collection::vec(0.0f64..3.0, 2..30)) {
        let n = values.len() as f64;
        let m = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1.0);
        let t = t_oracle(values.len() as u32 - 1, DEFAULT_LEVEL);
        let (got_m, got_h) = mean_ci(&values, DEFAULT_LEVEL).unwrap();
        prop_assert!((got_m - m).abs() < 1e-9);
        prop_assert!((got_h - t * var.sqrt() / n.sqrt()).abs() < 1e-6);
    }
}

fn env() -> Environment {
    Environment {
        backend: "mock".into(),
        model: "simulated".into(),
        simulate: true,
    }
}

fn mock_plan() -> ExperimentPlan {
    let mut plan = ExperimentPlan::preset("baselines", 21).unwrap();
    for c in &mut plan.cells {
        c.scenarios = 3;
    }
    plan
}

#[test]
fn report_is_a_pure_function_of_the_csv_tables() {
    let plan = mock_plan();
    let fixture = plan.company.load().unwrap();
    let backend = SimulatedBackend::new();
    let opts = RunOptions {
        backend: &backend,
        environment: env(),
        width: 4,
        transcripts: None,
    };
    let result = run_experiment(&plan, &fixture, &opts).unwrap();
    let data = ReportData::from_experiment(&result);
    let expected_rows: usize = result.cells.iter().flat_map(|c| &c.sessions).map(|s| s.rounds.len()).sum();
    assert_eq!(data.rounds.len(), expected_rows);

    let report = Report::build(&data, DEFAULT_LEVEL).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let files = emit(&report, &data, dir.path()).unwrap();
    assert!(files.iter().all(|f| f.exists()));

    let reread = ReportData::read_csv(&dir.path().join("tables")).unwrap();
    assert_eq!(reread, data);
    let again = Report::build(&reread, DEFAULT_LEVEL).unwrap();
    assert_eq!(again.to_json(), std::fs::read_to_string(dir.path().join("summary.json")).unwrap());
    assert_eq!(Report::from_json(&report.to_json()).unwrap(), report);

    // every setting has all three variants; interactions n/a only for the
    // non-conversational column
    for row in &report.summary.rows {
        for (variant, cell) in report.summary.variants.iter().zip(&row.cells) {
            let na = row.metric == Metric::Interactions && *variant == SessionMode::SingleRoundNonConversational;
            match cell {
                TableCell::NotApplicable => assert!(na),
                TableCell::Value(_) => assert!(!na),
                TableCell::Missing => panic!("missing cell in {} {:?}", row.setting, row.metric),
            }
        }
    }
    assert_eq!(report.summary.rows.len(), 6 * 4);

    let n_sweep = report.figures.iter().find(|f| f.name == "n_sweep").unwrap();
    let mut series: Vec<&str> = n_sweep.series.iter().map(|s| s.series.as_str()).collect();
    series.dedup();
    assert_eq!(series.len(), 3);
    assert!(n_sweep.series.len() <= 12);
    assert!(report.figures.iter().any(|f| f.name == "k_sweep"));
    assert!(report.figures.iter().any(|f| f.name == "knowledge_graph"));

    let summary_csv = std::fs::read_to_string(dir.path().join("tables/summary.csv")).unwrap();
    assert!(summary_csv.contains(",n/a,"));
}

#[test]
fn empty_data_is_an_error() {
    assert!(Report::build(&ReportData::default(), DEFAULT_LEVEL).is_err());
}

#[test]
fn robustness_table_has_three_counts_and_zero_spread_under_mock() {
    let mut plan = ExperimentPlan::preset("robustness", 3).unwrap();
    plan.cells[0].scenarios = 5;
    let fixture = plan.company.load().unwrap();
    let backend = SimulatedBackend::new();
    let opts = RunOptions {
        backend: &backend,
        environment: env(),
        width: 2,
        transcripts: None,
    };
    let result = run_robustness(&plan, &[0, 1, 2], &fixture, &opts).unwrap();
    let mut data = ReportData::default();
    data.add_robustness(&result);
    let report = Report::build(&data, DEFAULT_LEVEL).unwrap();
    let table = report.robustness.unwrap();
    assert_eq!(table.counts, vec![0, 1, 2]);
    assert_eq!(table.rows.len(), 3);
    for row in &table.rows {
        assert_eq!(row.cells.len(), 3);
        assert_eq!(row.std_of_mean, Some(0.0));
    }
}

#[test]
fn failed_scenarios_are_counted_not_averaged() {
    let plan = ExperimentPlan::new("f", 2, vec![GridCell::new("c", 3, 2, 3)]);
    let fixture = plan.company.load().unwrap();
    let backend = quorum::backend::ScriptedBackend::new();
    let opts = RunOptions {
        backend: &backend,
        environment: env(),
        width: 1,
        transcripts: None,
    };
    let result = run_experiment(&plan, &fixture, &opts).unwrap();
    assert_eq!(result.session_count(), 3);
    let report = Report::build(&ReportData::from_experiment(&result), DEFAULT_LEVEL).unwrap();
    assert_eq!(report.cells[0].failure_rate, 1.0);
    assert!(report.cells[0].headline.is_empty());
}
