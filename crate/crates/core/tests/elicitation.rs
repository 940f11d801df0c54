use quorum::backend::{tags, CallSite, ModelParams, ScriptKey, ScriptedBackend};
use quorum::dialogue::{run_elicitation, Elicitation, SimulatedMember, Speaker, Termination};
use quorum::model::{EmployeeProfile, KnowledgeGraph};

fn member() -> SimulatedMember {
    let profile = EmployeeProfile {
        name: "Member 1".into(),
        role: "Analyst".into(),
        manager: None,
        level: 1,
        responsibilities: vec!["Reports".into()],
        schedule_preferences: "I prefer mornings.".into(),
        preference_rules: vec![],
        pronoun: None,
    };
    SimulatedMember::from_profile(&profile, "Acme", &KnowledgeGraph::default(), false)
}

fn script(intent: &[&str], member: &[&str]) -> ScriptedBackend {
    let backend = ScriptedBackend::new();
    backend.script(ScriptKey::new(tags::INTENT, 1), intent.iter().copied()).unwrap();
    backend.script(ScriptKey::new(tags::MEMBER, 1), member.iter().copied()).unwrap();
    backend
}

fn elicit(backend: &ScriptedBackend, max_turns: usize) -> quorum::dialogue::Conversation {
    let m = member();
    let params = ModelParams::default();
    let setup = Elicitation {
        member: &m,
        invite: "Please pick a time.",
        options: None,
        world: None,
        max_turns,
    };
    run_elicitation(&setup, backend, &CallSite::new("s", 1, &params)).unwrap()
}

#[test]
fn immediate_acceptance_is_one_interaction() {
    let backend = script(&["Does 10am work?", "Noted. <EXIT>"], &["Yes, 10am works."]);
    let conv = elicit(&backend, 8);
    assert_eq!(conv.member_turns(), 1);
    assert_eq!(conv.terminated_by, Termination::ExitSentinel);
    assert_eq!(conv.turns.len(), 3);
    assert_eq!(conv.turns[0].speaker, Speaker::Assistant);
    assert!(backend.remaining().values().all(|&n| n == 0));
}

#[test]
fn two_rejections_then_acceptance_is_three_interactions() {
    let backend = script(
        &["Does 10am work?", "Why not? Any alternative?", "How about 11am?", "Great. <EXIT>"],
        &["No.", "I am busy then, maybe later.", "11am works."],
    );
    let conv = elicit(&backend, 8);
    assert_eq!(conv.member_turns(), 3);
    assert_eq!(conv.terminated_by, Termination::ExitSentinel);
}

#[test]
fn dialogue_stops_at_the_turn_cap() {
    let backend = script(&["Q1", "Q2", "Q3", "Q4"], &["A1", "A2", "A3"]);
    let conv = elicit(&backend, 2);
    assert_eq!(conv.member_turns(), 2);
    assert_eq!(conv.terminated_by, Termination::MaxTurns);
    assert_eq!(conv.turns.last().unwrap().speaker, Speaker::Assistant);
}

#[test]
fn backend_failure_keeps_the_partial_dialogue() {
    let backend = script(&["Does 10am work?"], &["No."]);
    let m = member();
    let params = ModelParams::default();
    let setup = Elicitation {
        member: &m,
        invite: "Please pick a time.",
        options: None,
        world: None,
        max_turns: 8,
    };
    let err = run_elicitation(&setup, &backend, &CallSite::new("s", 1, &params)).unwrap_err();
    match err {
        quorum::dialogue::DialogueError::Elicitation { conversation, .. } => {
            assert_eq!(conversation.member_turns(), 1);
            assert_eq!(conversation.terminated_by, Termination::Error);
        }
        other => panic!("unexpected {other:?}"),
    }
}
