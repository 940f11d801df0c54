use quorum::backend::TranscriptLog;
use quorum::harness::{
    run_experiment, run_robustness, sample_scenarios, scenario_seed, Environment, ExperimentPlan, GridCell, RunOptions,
};
use quorum::model::generate_company;
use quorum::protocol::SessionMode;
use quorum::sim::SimulatedBackend;

fn env() -> Environment {
    Environment {
        backend: "mock".into(),
        model: "simulated".into(),
        simulate: true,
    }
}

fn small_plan() -> ExperimentPlan {
    ExperimentPlan::new(
        "small",
        5,
        vec![GridCell::new("a", 3, 2, 3), GridCell::new("b", 4, 2, 3)],
    )
}

#[test]
fn two_cells_of_three_give_six_sessions() {
    let plan = small_plan();
    let fixture = plan.company.load().unwrap();
    let backend = SimulatedBackend::new();
    let opts = RunOptions {
        backend: &backend,
        environment: env(),
        width: 2,
        transcripts: None,
    };
    let result = run_experiment(&plan, &fixture, &opts).unwrap();
    assert_eq!(result.session_count(), 6);
    assert!(result.cells.iter().all(|c| c.failure_rate() == 0.0));
}

#[test]
fn reruns_are_identical_whatever_the_width() {
    let plan = small_plan();
    let fixture = plan.company.load().unwrap();
    let backend = SimulatedBackend::new();
    let run = |width| {
        let opts = RunOptions {
            backend: &backend,
            environment: env(),
            width,
            transcripts: None,
        };
        run_experiment(&plan, &fixture, &opts).unwrap().to_json()
    };
    assert_eq!(run(1), run(4));
}

#[test]
fn sampling_is_deterministic_and_distinct() {
    let fixture = generate_company(3, 34).unwrap();
    let a = sample_scenarios(&fixture, 5, 20, 9, true).unwrap();
    let b = sample_scenarios(&fixture, 5, 20, 9, true).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.len(), 20);
    assert!(a.iter().all(|m| m.size() == 5));
    for (i, m) in a.iter().enumerate() {
        assert!(!a[..i].contains(m));
    }
    assert!(sample_scenarios(&fixture, 5, 500, 9, false).is_err());
}

#[test]
fn seeds_depend_on_every_component() {
    let s = scenario_seed(1, "n3-k2", 0);
    assert_eq!(s, scenario_seed(1, "n3-k2", 0));
    assert_ne!(s, scenario_seed(2, "n3-k2", 0));
    assert_ne!(s, scenario_seed(1, "n3-k3", 0));
    assert_ne!(s, scenario_seed(1, "n3-k2", 1));
}

#[test]
fn presets_have_the_expected_shape() {
    let grid = ExperimentPlan::preset("grid", 1).unwrap();
    assert_eq!(grid.total_sessions(), 120);
    let baselines = ExperimentPlan::preset("baselines", 1).unwrap();
    assert_eq!(baselines.cells.len(), 18);
    let robust = ExperimentPlan::preset("robustness", 1).unwrap();
    assert_eq!(robust.paraphrase_counts, vec![0, 1, 2]);
    assert!(ExperimentPlan::preset("nope", 1).is_none());
}

#[test]
fn invalid_cells_are_rejected() {
    let mut plan = small_plan();
    plan.cells[0].k = 3;
    assert!(plan.validate().is_err());
    let mut plan = small_plan();
    plan.cells[1].label = "a".into();
    assert!(plan.validate().is_err());
}

#[test]
fn mock_paraphrases_leave_scores_unchanged() {
    let mut plan = ExperimentPlan::preset("robustness", 4).unwrap();
    plan.cells[0].scenarios = 4;
    assert_eq!(plan.cells[0].mode, SessionMode::SingleRoundNonConversational);
    let fixture = plan.company.load().unwrap();
    let backend = SimulatedBackend::new();
    let log = TranscriptLog::in_memory();
    let opts = RunOptions {
        backend: &backend,
        environment: env(),
        width: 2,
        transcripts: Some(&log),
    };
    let result = run_robustness(&plan, &[0, 1, 2], &fixture, &opts).unwrap();
    assert_eq!(result.runs.len(), 3);
    let scores = |i: usize| -> Vec<_> {
        result.runs[i].cells[0]
            .sessions
            .iter()
            .map(|s| s.rounds[0].scores.scores.clone())
            .collect()
    };
    assert_eq!(scores(0), scores(1));
    assert_eq!(scores(0), scores(2));
    let texts = |i: usize| -> Vec<_> {
        result.runs[i].cells[0]
            .sessions
            .iter()
            .map(|s| s.rounds[0].preferences[0].preferences.clone())
            .collect()
    };
    assert_ne!(texts(0), texts(1));
    assert!(log.records().iter().any(|r| r.tag == "paraphrase"));
}
