//! Rendered prompts compared against files in `tests/golden/`.
//! Run with `UPDATE_GOLDEN=1` to rewrite the files after a deliberate change.

use std::collections::BTreeSet;
use std::path::PathBuf;

use chrono::NaiveDate;
use quorum::backend::{tags, CallKey, ChatMessage, CompletionRequest, ModelParams};
use quorum::coordination::{
    render_coordinator_prompt, render_evaluator_prompt, CoordinationContext, OptionSet, ProposedOption,
};
use quorum::dialogue::{
    render_intent_prompt, render_paraphrase_prompt, render_summarizer_prompt, Conversation, PreferenceSet,
    SimulatedMember, Speaker, Termination, Turn,
};
use quorum::model::{EmployeeProfile, KnowledgeGraph, Meeting, MemberId};
use quorum::protocol::compose_invite;

fn golden(name: &str, actual: &str) {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, actual).unwrap();
        return;
    }
    let expected = std::fs::read_to_string(&path)
        .unwrap_or_else(|e| panic!("{}: {e} (run with UPDATE_GOLDEN=1 to create)", path.display()));
    assert!(expected == actual, "{name} differs from golden file:\n--- expected\n{expected}\n--- actual\n{actual}");
}

fn employee(name: &str, role: &str, manager: Option<&str>, level: u8, prefs: &str) -> EmployeeProfile {
    EmployeeProfile {
        name: name.into(),
        role: role.into(),
        manager: manager.map(MemberId::from),
        level,
        responsibilities: vec![format!("{role} duties"), "Team meetings".into()],
        schedule_preferences: prefs.into(),
        preference_rules: vec![],
        pronoun: None,
    }
}

fn company() -> (Vec<EmployeeProfile>, Meeting, KnowledgeGraph) {
    let employees = vec![
        employee("Member 1", "Head of Research", None, 4, "I prefer meetings in the morning."),
        employee(
            "Member 2",
            "Research Scientist",
            Some("Member 1"),
            2,
            "I prefer afternoons. I cannot meet before 10am.",
        ),
        employee("Member 3", "Data Engineer", Some("Member 1"), 2, "I avoid meetings over lunch."),
    ];
    let meeting = Meeting {
        organizer: "Member 1".into(),
        members: vec!["Member 1".into(), "Member 2".into(), "Member 3".into()],
        subject: "Model evaluation sync".into(),
        date: NaiveDate::from_ymd_opt(2023, 2, 16).unwrap(),
        duration_minutes: 60,
    };
    let graph = KnowledgeGraph::build(&employees, std::slice::from_ref(&meeting)).unwrap();
    (employees, meeting, graph)
}

fn invite(required: bool) -> String {
    let (_, meeting, _) = company();
    compose_invite(&meeting, required.then(|| MemberId::from("Member 1")).as_ref())
}

fn options(round: u32) -> OptionSet {
    OptionSet {
        round,
        options: vec![
            ProposedOption {
                id: "option1".into(),
                suggestion: "Feb 16, 10am".into(),
                satisfied_members: vec!["Member 1".into(), "Member 3".into()],
                reasons: vec!["Member 1: morning".into(), "Member 3: not over lunch".into()],
                slot: None,
            },
            ProposedOption {
                id: "option2".into(),
                suggestion: "Feb 16, 2pm".into(),
                satisfied_members: vec!["Member 2".into(), "Member 3".into()],
                reasons: vec!["Member 2: afternoon".into()],
                slot: None,
            },
        ],
        carried_candidate: None,
    }
}

fn preferences() -> Vec<PreferenceSet> {
    let p = |m: &str, texts: &[&str]| PreferenceSet {
        member: m.into(),
        round: 1,
        preferences: texts.iter().map(|s| s.to_string()).collect(),
        agreed_option: None,
        rules: vec![],
    };
    vec![
        p("Member 1", &["Prefers mornings"]),
        p("Member 2", &["Prefers afternoons", "Not before 10am"]),
        p("Member 3", &["Avoids lunch hours"]),
    ]
}

fn context(round: u32, kg: bool) -> CoordinationContext {
    let (_, meeting, graph) = company();
    let members = meeting.members.clone();
    let ids: BTreeSet<MemberId> = members.iter().cloned().collect();
    let candidate = (round > 1).then(|| options(round - 1).options[0].clone());
    CoordinationContext {
        round,
        k: 2,
        invite: invite(kg),
        required_attendees: if kg { vec!["Member 1".into()] } else { vec![] },
        members,
        preferences: preferences(),
        candidate,
        candidate_users: if round > 1 { 2 } else { 0 },
        use_knowledge_graph: kg,
        graph: kg.then(|| graph.induce(&ids).unwrap()),
        proposed: vec![],
        world: None,
    }
}

#[test]
fn intent_prompts() {
    golden("intent_round1.txt", &render_intent_prompt(&invite(false), None).unwrap());
    golden("intent_round2.txt", &render_intent_prompt(&invite(false), Some(&options(1))).unwrap());
}

#[test]
fn member_prompt() {
    let (employees, _, graph) = company();
    let member = SimulatedMember::from_profile(&employees[1], "MedAI Labs", &graph, false);
    golden("member.txt", &member.render_prompt().unwrap());
    let lonely = SimulatedMember::from_profile(&employees[0], "MedAI Labs", &KnowledgeGraph::default(), false);
    golden("member_no_relations.txt", &lonely.render_prompt().unwrap());
}

#[test]
fn summarizer_prompt() {
    let conversation = Conversation {
        member: "Member 2".into(),
        round: 1,
        turns: vec![
            Turn {
                speaker: Speaker::Assistant,
                text: "Hello! When would you like to meet?".into(),
            },
            Turn {
                speaker: Speaker::Member,
                text: "Afternoons work best, never before 10am.".into(),
            },
            Turn {
                speaker: Speaker::Assistant,
                text: "Thank you, I have noted your response. <EXIT>".into(),
            },
        ],
        terminated_by: Termination::ExitSentinel,
    };
    golden("summarizer.txt", &render_summarizer_prompt(&conversation).unwrap());
}

#[test]
fn coordinator_prompts() {
    golden("coordinator_round1.txt", &render_coordinator_prompt(&context(1, false)).unwrap());
    golden("coordinator_round2.txt", &render_coordinator_prompt(&context(2, false)).unwrap());
    golden("coordinator_round2_graph.txt", &render_coordinator_prompt(&context(2, true)).unwrap());
}

#[test]
fn evaluator_prompt() {
    golden("evaluator.txt", &render_evaluator_prompt(&preferences(), &options(1)).unwrap());
}

#[test]
fn paraphrase_prompt() {
    golden(
        "paraphrase.txt",
        &render_paraphrase_prompt("I prefer afternoons. I cannot meet before 10am.").unwrap(),
    );
}

#[test]
fn wire_body() {
    let request = CompletionRequest::new(
        tags::EVALUATOR,
        CallKey {
            scenario: "s".into(),
            round: 1,
            member: None,
        },
        vec![ChatMessage::system("Score the options."), ChatMessage::user("Go.")],
        &ModelParams::default(),
    )
    .with_context(serde_json::json!({"sim": "secret"}));
    let body = serde_json::to_string_pretty(&request.wire_body()).unwrap() + "\n";
    assert!(!body.contains("secret"));
    golden("wire_body.json", &body);
}
