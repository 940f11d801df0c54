use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::{json, Map, Value};

use super::option::{option_id, option_prompt_value, OptionSet, ProposedOption};
use super::{CoordinationError, Violation, ViolationKind};
use crate::backend::{tags, Backend, CallSite, ChatMessage};
use crate::dialogue::{extract_json, templates, Bindings, PreferenceSet, PromptTemplate};
use crate::model::{KnowledgeGraph, MemberId};
use crate::schedule::TimeSlot;
use crate::sim::{MemberRules, SimContext, SimWorld};

/// Everything the coordinator sees in one round.
#[derive(Debug, Clone, PartialEq)]
pub struct CoordinationContext {
    pub round: u32,
    pub k: usize,
    pub invite: String,
    pub members: Vec<MemberId>,
    /// One entry per member, in member order.
    pub preferences: Vec<PreferenceSet>,
    /// The previous round's candidate; `None` in round 1.
    pub candidate: Option<ProposedOption>,
    /// Members with a positive score on the candidate last round.
    pub candidate_users: usize,
    pub use_knowledge_graph: bool,
    /// Subgraph induced on the meeting members.
    pub graph: Option<KnowledgeGraph>,
    pub required_attendees: Vec<MemberId>,
    /// Slots proposed in earlier rounds.
    pub proposed: Vec<TimeSlot>,
    pub world: Option<SimWorld>,
}

impl CoordinationContext {
    pub fn check(&self) -> Result<(), CoordinationError> {
        if self.k == 0 {
            return Err(CoordinationError::Context("K must be at least 1".into()));
        }
        let have: Vec<&MemberId> = self.preferences.iter().map(|p| &p.member).collect();
        let want: Vec<&MemberId> = self.members.iter().collect();
        if have != want {
            return Err(CoordinationError::Context(format!(
                "preferences cover {have:?} but the members are {want:?}"
            )));
        }
        if self.round > 1 && self.candidate.is_none() {
            return Err(CoordinationError::Context(format!(
                "round {} has no carried candidate",
                self.round
            )));
        }
        if self.use_knowledge_graph && self.graph.is_none() {
            return Err(CoordinationError::Context("knowledge graph flag set without a graph".into()));
        }
        Ok(())
    }

    fn member_rules(&self) -> Vec<MemberRules> {
        self.preferences
            .iter()
            .map(|p| MemberRules {
                member: p.member.clone(),
                rules: p.rules.clone(),
            })
            .collect()
    }
}

/// `{"Member 1": [...], ...}` as shown to the coordinator and evaluator.
pub fn preferences_json(preferences: &[PreferenceSet]) -> String {
    let mut map = Map::new();
    for p in preferences {
        map.insert(p.member.to_string(), json!(p.preferences));
    }
    serde_json::to_string_pretty(&Value::Object(map)).expect("preferences serialize")
}

/// Members named in `<name> must attend` phrases of the invite.
pub fn parse_required_attendees(invite: &str, members: &[MemberId]) -> Vec<MemberId> {
    let lower = invite.to_lowercase();
    members
        .iter()
        .filter(|m| lower.contains(&format!("{} must attend", m.as_str().to_lowercase())))
        .cloned()
        .collect()
}

pub fn render_coordinator_prompt(ctx: &CoordinationContext) -> Result<String, CoordinationError> {
    let mut rules: Vec<String> = Vec::new();
    if ctx.candidate.is_some() {
        rules.push(templates::RULE_KEEP_CANDIDATE.to_string());
        rules.push(PromptTemplate::new("coordinator-new-options", templates::RULE_NEW_OPTIONS).render(
            &Bindings::new()
                .set("K - 1", ctx.k.saturating_sub(1))
                .set("num_candidate_users", ctx.candidate_users),
        )?);
    } else {
        rules.push(templates::RULE_FIRST_ROUND.to_string());
    }
    rules.push(templates::RULE_REQUIRED.to_string());
    if ctx.use_knowledge_graph {
        rules.push(templates::RULE_TEAMS.to_string());
        rules.push(templates::RULE_MANAGERS.to_string());
    }
    let instructions: String = rules
        .iter()
        .enumerate()
        .map(|(i, r)| format!("{}. {r}\n", i + 1))
        .collect();

    let candidate_section = match &ctx.candidate {
        Some(c) => templates::coordinator_candidate().render(
            &Bindings::new().set(
                "candidate_option",
                serde_json::to_string_pretty(&option_prompt_value(c)).expect("option serializes"),
            ),
        )?,
        None => String::new(),
    };

    let graph_section = match (&ctx.graph, ctx.use_knowledge_graph) {
        (Some(g), true) => {
            let relationships: Vec<Value> = g
                .edges
                .iter()
                .map(|e| json!({"source": e.source, "target": e.target, "relation": e.relation}))
                .collect();
            let roles: BTreeMap<&MemberId, &str> = g.nodes.iter().map(|(id, n)| (id, n.role.as_str())).collect();
            let duties: BTreeMap<&MemberId, &Vec<String>> =
                g.nodes.iter().map(|(id, n)| (id, &n.responsibilities)).collect();
            templates::coordinator_graph().render(
                &Bindings::new()
                    .set("relationships", pretty(&relationships))
                    .set("roles", pretty(&roles))
                    .set("responsibilities", pretty(&duties)),
            )?
        }
        _ => String::new(),
    };

    Ok(templates::coordinator().render(
        &Bindings::new()
            .set("K", ctx.k)
            .set("instructions", instructions)
            .set("candidate_section", candidate_section)
            .set("summarized_preferences", preferences_json(&ctx.preferences))
            .set("organizer_message", &ctx.invite)
            .set("knowledge_graph_section", graph_section),
    )?)
}

fn pretty<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("value serializes")
}

/// Asks the coordinator for this round's options and repairs the answer.
pub fn propose_options(
    ctx: &CoordinationContext,
    backend: &dyn Backend,
    site: &CallSite<'_>,
) -> Result<(OptionSet, Vec<Violation>), CoordinationError> {
    ctx.check()?;
    let prompt = render_coordinator_prompt(ctx)?;
    let mut request = site.request(tags::COORDINATOR, None, vec![ChatMessage::system(prompt)]);
    if let Some(world) = &ctx.world {
        request = request.with_context(
            SimContext::Coordinator {
                round: ctx.round,
                k: ctx.k,
                preferences: ctx.member_rules(),
                world: world.clone(),
                candidate: ctx.candidate.as_ref().map(ProposedOption::view),
                candidate_users: ctx.candidate_users,
                proposed: ctx.proposed.clone(),
                required: ctx.required_attendees.clone(),
            }
            .to_value(),
        );
    }
    let text = backend.complete(&request)?.text;
    parse_coordinator_output(&text, ctx)
}

/// Extracts and parses raw coordinator output.
pub fn parse_coordinator_output(
    text: &str,
    ctx: &CoordinationContext,
) -> Result<(OptionSet, Vec<Violation>), CoordinationError> {
    let value = extract_json(text).map_err(|e| CoordinationError::Unparseable {
        stage: "coordinator",
        detail: e.to_string(),
    })?;
    parse_option_set(&value, ctx)
}

fn normalize(s: &str) -> String {
    s.split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .trim_end_matches('.')
        .to_lowercase()
}

fn text_of(v: &Value) -> Option<String> {
    match v {
        Value::String(s) => Some(s.trim().to_string()).filter(|s| !s.is_empty()),
        Value::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

fn string_list(v: Option<&Value>) -> Vec<String> {
    match v {
        Some(Value::Array(items)) => items.iter().filter_map(text_of).collect(),
        Some(Value::String(s)) => s
            .split([',', ';'])
            .flat_map(|part| part.split(" and "))
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(str::to_string)
            .collect(),
        _ => Vec::new(),
    }
}

fn reason_list(v: Option<&Value>) -> Vec<String> {
    match v {
        Some(Value::Array(items)) => items.iter().filter_map(text_of).collect(),
        Some(Value::String(s)) if !s.trim().is_empty() => vec![s.trim().to_string()],
        _ => Vec::new(),
    }
}

/// Turns coordinator JSON into an [`OptionSet`], repairing what can be
/// repaired mechanically: unknown member names are dropped, the carried
/// candidate is put first, and the list is cut to K. Every repair is
/// reported as a [`Violation`].
pub fn parse_option_set(
    value: &Value,
    ctx: &CoordinationContext,
) -> Result<(OptionSet, Vec<Violation>), CoordinationError> {
    let round = ctx.round;
    let mut violations = Vec::new();
    let mut raw: Vec<(String, &Map<String, Value>)> = Vec::new();
    let items: Vec<(String, &Value)> = match value {
        Value::Object(map) => match map.get("options") {
            Some(Value::Array(list)) => list.iter().enumerate().map(|(i, v)| (option_id(i), v)).collect(),
            _ if map.contains_key("option") => vec![(option_id(0), value)],
            _ => map.iter().map(|(k, v)| (k.clone(), v)).collect(),
        },
        Value::Array(list) => list.iter().enumerate().map(|(i, v)| (option_id(i), v)).collect(),
        other => {
            return Err(CoordinationError::Unparseable {
                stage: "coordinator",
                detail: format!("expected an object or list, got {other}"),
            })
        }
    };
    for (label, item) in items {
        match item.as_object() {
            Some(obj) => raw.push((label, obj)),
            None => violations.push(Violation::new(
                round,
                ViolationKind::MalformedOption {
                    detail: format!("{label} is not an object: {item}"),
                },
            )),
        }
    }

    let mut options: Vec<ProposedOption> = Vec::new();
    for (label, obj) in raw {
        let Some(suggestion) = obj.get("option").and_then(text_of) else {
            violations.push(Violation::new(
                round,
                ViolationKind::MalformedOption {
                    detail: format!("{label} has no \"option\" text"),
                },
            ));
            continue;
        };
        if options.iter().any(|o| normalize(&o.suggestion) == normalize(&suggestion)) {
            violations.push(Violation::new(round, ViolationKind::DuplicateOption { suggestion }));
            continue;
        }
        let mut satisfied_members: Vec<MemberId> = Vec::new();
        for name in string_list(obj.get("users")) {
            match ctx.members.iter().find(|m| m.as_str().eq_ignore_ascii_case(name.trim())) {
                Some(m) if !satisfied_members.contains(m) => satisfied_members.push(m.clone()),
                Some(_) => {}
                None => violations.push(Violation::new(
                    round,
                    ViolationKind::UnknownMember {
                        option: label.clone(),
                        name,
                    },
                )),
            }
        }
        let mut reasons = reason_list(obj.get("reasons"));
        if reasons.is_empty() {
            violations.push(Violation::new(round, ViolationKind::MissingReasons { option: label.clone() }));
            reasons.push("no reason given".into());
        }
        let slot = obj
            .get("slot")
            .and_then(|v| serde_json::from_value::<TimeSlot>(v.clone()).ok())
            .or_else(|| {
                ctx.world.as_ref().and_then(|w| {
                    TimeSlot::parse_suggestion(&suggestion, w.universe.date, w.universe.duration_minutes)
                })
            });
        options.push(ProposedOption {
            id: String::new(),
            suggestion,
            satisfied_members,
            reasons,
            slot,
        });
    }

    if let Some(candidate) = &ctx.candidate {
        let pos = options.iter().position(|o| {
            normalize(&o.suggestion) == normalize(&candidate.suggestion)
                || (o.slot.is_some() && o.slot == candidate.slot)
        });
        match pos {
            Some(p) => {
                let mut carried = options.remove(p);
                carried.suggestion = candidate.suggestion.clone();
                carried.slot = carried.slot.or(candidate.slot);
                options.insert(0, carried);
                if p != 0 {
                    violations.push(Violation::new(round, ViolationKind::CandidateMoved { from: p }));
                }
            }
            None => {
                options.insert(0, candidate.clone());
                violations.push(Violation::new(
                    round,
                    ViolationKind::CandidateInserted {
                        suggestion: candidate.suggestion.clone(),
                    },
                ));
            }
        }
    }

    if options.is_empty() {
        return Err(CoordinationError::NoOptions);
    }
    if options.len() > ctx.k {
        violations.push(Violation::new(
            round,
            ViolationKind::TooManyOptions {
                proposed: options.len(),
                max: ctx.k,
            },
        ));
        options.truncate(ctx.k);
    }
    for (j, o) in options.iter_mut().enumerate() {
        o.id = option_id(j);
    }
    let carried_candidate = ctx.candidate.as_ref().map(|_| option_id(0));
    Ok((
        OptionSet {
            round,
            options,
            carried_candidate,
        },
        violations,
    ))
}
