use serde_json::{json, Map, Value};

use super::policy::{agreed_option, assistant_reply, evaluator_scores, member_reply, mock_rewrite};
use super::SimContext;
use crate::backend::{Backend, BackendError, Completion, CompletionRequest, Role};
use crate::coordination::{greedy_options, GreedyInput};

/// Answers every call from its [`SimContext`] sidecar. Stateless, so it can
/// serve any number of scenarios concurrently.
#[derive(Debug, Default, Clone, Copy)]
pub struct SimulatedBackend;

impl SimulatedBackend {
    pub fn new() -> Self {
        Self
    }
}

impl Backend for SimulatedBackend {
    fn complete(&self, request: &CompletionRequest) -> Result<Completion, BackendError> {
        request.validate()?;
        let raw = request.context.as_ref().ok_or_else(|| {
            BackendError::Simulation(format!("no simulation context on {}", request.describe()))
        })?;
        let ctx: SimContext = serde_json::from_value(raw.clone())
            .map_err(|e| BackendError::Simulation(format!("bad context on {}: {e}", request.describe())))?;
        Ok(Completion::new(respond(&ctx, request)))
    }
}

fn respond(ctx: &SimContext, request: &CompletionRequest) -> String {
    match ctx {
        SimContext::Intent { member, world, options } => {
            let last = request.messages.last().filter(|m| m.role == Role::User);
            assistant_reply(member, world, options, last.map(|m| m.content.as_str()))
        }
        SimContext::Member { rules, world, options } => {
            let turn = request.messages.iter().filter(|m| m.role == Role::Assistant).count();
            member_reply(rules, world, options, turn)
        }
        SimContext::Summarizer { rules, member_messages } => {
            let out = json!({
                "preferences": rules.iter().map(|r| r.restatement()).collect::<Vec<_>>(),
                "option": agreed_option(member_messages),
                "predicates": rules,
            });
            serde_json::to_string_pretty(&out).expect("summary serializes")
        }
        SimContext::Coordinator {
            round,
            k,
            preferences,
            world,
            candidate,
            candidate_users,
            proposed,
            required,
        } => {
            let options = greedy_options(&GreedyInput {
                round: *round,
                k: *k,
                preferences,
                world,
                candidate: candidate.as_ref(),
                candidate_users: *candidate_users,
                proposed,
                required,
            });
            let mut map = Map::new();
            for (j, o) in options.iter().enumerate() {
                map.insert(
                    format!("option{}", j + 1),
                    json!({
                        "option": o.suggestion,
                        "users": o.satisfied_members,
                        "reasons": o.reasons,
                        "slot": o.slot,
                    }),
                );
            }
            serde_json::to_string_pretty(&Value::Object(map)).expect("options serialize")
        }
        SimContext::Evaluator {
            preferences,
            world,
            options,
        } => {
            let grid = evaluator_scores(preferences, options, world);
            // Zero scores are left out, as a model following the 1-3 scale would.
            let entries: Vec<Value> = options
                .iter()
                .zip(&grid)
                .map(|(o, row)| {
                    let scores: Vec<Value> = preferences
                        .iter()
                        .zip(row)
                        .filter(|(_, &s)| s > 0)
                        .map(|(p, &s)| {
                            json!({
                                "user": p.member,
                                "score": s,
                                "reasons": [format!("scores {s} against the stated preferences")],
                            })
                        })
                        .collect();
                    json!({"option": o.id, "scores": scores})
                })
                .collect();
            serde_json::to_string_pretty(&Value::Array(entries)).expect("scores serialize")
        }
        SimContext::Paraphrase { text } => mock_rewrite(text),
    }
}
