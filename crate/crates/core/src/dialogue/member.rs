use serde::{Deserialize, Serialize};

use super::prompt::{templates, Bindings, PromptError};
use crate::model::{EmployeeProfile, KnowledgeGraph, MemberId, Relation};
use crate::schedule::PreferenceRule;

/// A meeting member played by a language model (or by the simulation).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulatedMember {
    pub profile: EmployeeProfile,
    pub company: String,
    pub teammates: Vec<MemberId>,
    pub collaborators: Vec<MemberId>,
    /// Preference text the agent is given; the profile text unless it was
    /// paraphrased.
    pub preference_text: String,
    /// Structured preferences, present only when the run is simulated.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_truth: Option<Vec<PreferenceRule>>,
}

impl SimulatedMember {
    pub fn from_profile(profile: &EmployeeProfile, company: &str, graph: &KnowledgeGraph, simulate: bool) -> Self {
        Self {
            teammates: graph.neighbors(&profile.name, Relation::Teammate).into_iter().collect(),
            collaborators: graph.neighbors(&profile.name, Relation::Collaborator).into_iter().collect(),
            preference_text: profile.schedule_preferences.clone(),
            ground_truth: simulate.then(|| profile.preference_rules.clone()),
            company: company.to_string(),
            profile: profile.clone(),
        }
    }

    pub fn id(&self) -> &MemberId {
        &self.profile.name
    }

    pub fn render_prompt(&self) -> Result<String, PromptError> {
        let manager = self
            .profile
            .manager
            .as_ref()
            .map_or_else(|| "nobody".to_string(), |m| m.to_string());
        templates::member().render(
            &Bindings::new()
                .set("member.name", &self.profile.name)
                .set("member.role", &self.profile.role)
                .set("company", &self.company)
                .set("member.manager", manager)
                .set("member.teammates", join_or_none(&self.teammates))
                .set("member.collaborators", join_or_none(&self.collaborators))
                .set("member.preferences", split_sentences(&self.preference_text).join("\n")),
        )
    }
}

fn join_or_none(ids: &[MemberId]) -> String {
    if ids.is_empty() {
        "none".into()
    } else {
        ids.iter().map(MemberId::as_str).collect::<Vec<_>>().join(", ")
    }
}

/// Splits prose into sentences at `.`, `!` or `?` followed by whitespace.
pub fn split_sentences(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut current = String::new();
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        current.push(c);
        if matches!(c, '.' | '!' | '?') && chars.peek().is_none_or(|n| n.is_whitespace()) {
            let s = current.trim();
            if !s.is_empty() {
                out.push(s.to_string());
            }
            current.clear();
        }
    }
    let s = current.trim();
    if !s.is_empty() {
        out.push(s.to_string());
    }
    out
}
