//! Fixture suite of raw coordinator and evaluator outputs and the outcome
//! each must produce: parsed cleanly, repaired with violations, or rejected.

use quorum::coordination::{
    parse_coordinator_output, parse_evaluation, CoordinationContext, OptionSet, ProposedOption, Violation,
    ViolationKind,
};
use quorum::dialogue::PreferenceSet;
use quorum::model::MemberId;
use serde_json::Value;

/// Violation names, score matrix (evaluator only) and option count.
type Parsed = (Vec<String>, Option<Vec<Vec<u8>>>, usize);

pub const FIXTURES: &str = include_str!("../fixtures/model_outputs.json");

fn members() -> Vec<MemberId> {
    (1..=3).map(|i| MemberId::new(format!("Member {i}"))).collect()
}

fn context() -> CoordinationContext {
    let members = members();
    CoordinationContext {
        round: 1,
        k: 2,
        invite: "Hi all, let's meet.".into(),
        preferences: members
            .iter()
            .map(|m| PreferenceSet {
                member: m.clone(),
                round: 1,
                preferences: vec!["mornings".into()],
                agreed_option: None,
                rules: vec![],
            })
            .collect(),
        members,
        candidate: None,
        candidate_users: 0,
        use_knowledge_graph: false,
        graph: None,
        required_attendees: vec![],
        proposed: vec![],
        world: None,
    }
}

fn options() -> OptionSet {
    let option = |i: usize, text: &str| ProposedOption {
        id: format!("option{i}"),
        suggestion: text.into(),
        satisfied_members: vec![],
        reasons: vec!["r".into()],
        slot: None,
    };
    OptionSet {
        round: 1,
        options: vec![option(1, "Feb 16, 10am"), option(2, "Feb 16, 2pm")],
        carried_candidate: None,
    }
}

fn kind_name(v: &Violation) -> String {
    let tagged = serde_json::to_value(&v.kind).expect("violation serializes");
    let kind = tagged["kind"].as_str().unwrap_or("?").to_string();
    match &v.kind {
        ViolationKind::Score { issue } => {
            let issue = serde_json::to_value(issue).expect("issue serializes");
            format!("{kind}:{}", issue["issue"].as_str().unwrap_or("?"))
        }
        _ => kind,
    }
}

fn check(case: &Value) -> Result<(), String> {
    let output = case["output"].as_str().ok_or("case without output")?;
    let outcome = case["outcome"].as_str().ok_or("case without outcome")?;
    let expected_violations: Vec<String> = case["violations"]
        .as_array()
        .map(|a| a.iter().filter_map(|v| v.as_str().map(String::from)).collect())
        .unwrap_or_default();

    let parsed: Result<Parsed, String> = match case["stage"].as_str() {
        Some("coordinator") => parse_coordinator_output(output, &context())
            .map(|(set, v)| (v.iter().map(kind_name).collect(), None, set.len()))
            .map_err(|e| e.to_string()),
        Some("evaluator") => parse_evaluation(output, &options(), &members())
            .map(|(m, v)| (v.iter().map(kind_name).collect(), Some(m.scores), 0))
            .map_err(|e| e.to_string()),
        other => return Err(format!("unknown stage {other:?}")),
    };

    match (outcome, parsed) {
        ("rejected", Err(_)) => Ok(()),
        ("rejected", Ok(_)) => Err("accepted output that should be rejected".into()),
        (_, Err(e)) => Err(format!("rejected: {e}")),
        (expect, Ok((violations, scores, n_options))) => {
            if expect == "parsed" && !violations.is_empty() {
                return Err(format!("clean output produced violations {violations:?}"));
            }
            if expect == "repaired" && violations != expected_violations {
                return Err(format!("violations {violations:?}, expected {expected_violations:?}"));
            }
            if let Some(n) = case["options"].as_u64() {
                if n as usize != n_options {
                    return Err(format!("{n_options} options, expected {n}"));
                }
            }
            if let Some(want) = case.get("scores").filter(|v| !v.is_null()) {
                let want: Vec<Vec<u8>> = serde_json::from_value(want.clone()).map_err(|e| e.to_string())?;
                if scores.as_ref() != Some(&want) {
                    return Err(format!("scores {scores:?}, expected {want:?}"));
                }
            }
            Ok(())
        }
    }
}

/// Runs every case; returns `(name, outcome)` pairs.
pub fn run_suite() -> Vec<(String, Result<(), String>)> {
    let cases: Vec<Value> = serde_json::from_str(FIXTURES).expect("fixture file parses");
    cases
        .iter()
        .map(|c| (c["name"].as_str().unwrap_or("?").to_string(), check(c)))
        .collect()
}
