use quorum::coordination::acceptance_coverage;
use quorum::metrics::satisfied_count;
use quorum::model::{generate_company, generate_meetings, KnowledgeGraph};
use quorum::protocol::{run_session, SessionConfig, SessionMode, SessionOptions, SessionStatus};
use quorum::sim::{MemberRules, SimulatedBackend};

fn sessions(n: usize, k: usize, mode: SessionMode, kg: bool, count: usize) -> Vec<SessionConfig> {
    let fixture = generate_company(7, 34).unwrap();
    let graph = KnowledgeGraph::from_fixture(&fixture).unwrap();
    let meetings = generate_meetings(11, &fixture, n, count);
    assert_eq!(meetings.len(), count);
    meetings
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let opts = SessionOptions {
                k,
                mode,
                use_knowledge_graph: kg,
                ..SessionOptions::default()
            };
            SessionConfig::for_meeting(format!("s{i:03}"), &fixture, &graph, m, 100 + i as u64, opts).unwrap()
        })
        .collect()
}

#[test]
fn full_sessions_keep_candidate_and_never_regress() {
    let backend = SimulatedBackend::new();
    for config in sessions(5, 2, SessionMode::Full, false, 20) {
        let result = run_session(&config, &backend).unwrap();
        assert_eq!(result.status, SessionStatus::Completed, "{}", config.scenario_id);
        assert_eq!(result.rounds.len(), 4);
        for pair in result.rounds.windows(2) {
            let (prev, next) = (&pair[0], &pair[1]);
            let prev_candidate = &prev.options.options[prev.metrics.candidate_index];
            assert_eq!(next.options.options[0].suggestion, prev_candidate.suggestion);
            assert!(next.options.len() <= 2);
            let prev_users = satisfied_count(prev.scores.row(prev.metrics.candidate_index));
            let next_users = satisfied_count(next.scores.row(next.metrics.candidate_index));
            assert!(next_users >= prev_users, "{}: {prev_users} -> {next_users}", config.scenario_id);
        }
        for round in &result.rounds {
            let avg = round.metrics.avg_interactions.unwrap();
            assert!((1.0..=8.0).contains(&avg));
        }
    }
}

#[test]
fn single_round_modes_run_once() {
    let backend = SimulatedBackend::new();
    for mode in [SessionMode::SingleRoundConversational, SessionMode::SingleRoundNonConversational] {
        for config in sessions(3, 2, mode, false, 5) {
            let result = run_session(&config, &backend).unwrap();
            assert_eq!(result.rounds.len(), 1);
            let avg = result.rounds[0].metrics.avg_interactions;
            assert_eq!(avg.is_some(), mode.is_conversational());
            if !mode.is_conversational() {
                assert!(result.rounds[0].conversations.is_empty());
            }
        }
    }
}

#[test]
fn mock_reaches_the_optimum_in_most_scenarios() {
    let backend = SimulatedBackend::new();
    let configs = sessions(5, 2, SessionMode::Full, false, 50);
    let mut hits = 0;
    for config in &configs {
        let result = run_session(config, &backend).unwrap();
        let world = config.world();
        let rules: Vec<MemberRules> = config
            .members
            .iter()
            .map(|m| MemberRules {
                member: m.id().clone(),
                rules: m.ground_truth.clone().unwrap(),
            })
            .collect();
        let best = world
            .universe
            .slots()
            .iter()
            .map(|s| acceptance_coverage(&rules, s, &world))
            .max()
            .unwrap();
        let last = result.rounds.last().unwrap();
        let got = satisfied_count(last.scores.row(last.metrics.candidate_index));
        if got >= best {
            hits += 1;
        }
    }
    assert!(hits * 100 >= configs.len() * 95, "{hits}/{}", configs.len());
}

#[test]
fn knowledge_graph_invite_names_required_attendee() {
    let configs = sessions(5, 2, SessionMode::Full, true, 3);
    for c in &configs {
        assert!(c.invite.contains("must attend"), "{}", c.invite);
        let result = run_session(c, &SimulatedBackend::new()).unwrap();
        assert!(result.is_completed());
    }
}

#[test]
fn rejects_n_not_above_k() {
    let fixture = generate_company(7, 34).unwrap();
    let graph = KnowledgeGraph::from_fixture(&fixture).unwrap();
    let m = &generate_meetings(11, &fixture, 3, 1)[0];
    let opts = SessionOptions {
        k: 3,
        ..SessionOptions::default()
    };
    assert!(SessionConfig::for_meeting("x", &fixture, &graph, m, 1, opts).is_err());
}
