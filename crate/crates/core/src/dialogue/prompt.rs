//! Named-placeholder templates.
//!
//! A placeholder is `{name}` where the name may contain dots and an
//! arithmetic suffix such as `{member.name}` or `{K - 1}`. Braces that open
//! JSON examples (followed by a newline or a quote) are left alone, so the
//! output-format sections of the prompts need no escaping.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::sync::OnceLock;

use regex::Regex;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PromptError {
    #[error("template {template:?}: placeholder {{{placeholder}}} is not bound")]
    Missing { template: String, placeholder: String },
}

fn placeholder_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\{([A-Za-z_][A-Za-z0-9_.]*(?: [-+] [0-9]+)?)\}").expect("valid regex"))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    name: String,
    body: String,
    placeholders: Vec<String>,
}

impl PromptTemplate {
    pub fn new(name: impl Into<String>, body: impl Into<String>) -> Self {
        let body = body.into();
        let mut placeholders: Vec<String> = Vec::new();
        for cap in placeholder_re().captures_iter(&body) {
            let p = cap[1].to_string();
            if !placeholders.contains(&p) {
                placeholders.push(p);
            }
        }
        Self {
            name: name.into(),
            body,
            placeholders,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn body(&self) -> &str {
        &self.body
    }

    /// Required placeholders in order of first appearance.
    pub fn placeholders(&self) -> &[String] {
        &self.placeholders
    }

    /// Substitutes every placeholder in one pass; bound values are inserted
    /// verbatim and never rescanned.
    pub fn render(&self, bindings: &Bindings) -> Result<String, PromptError> {
        if let Some(missing) = self.placeholders.iter().find(|p| !bindings.0.contains_key(*p)) {
            return Err(PromptError::Missing {
                template: self.name.clone(),
                placeholder: missing.clone(),
            });
        }
        let mut out = String::with_capacity(self.body.len() + 256);
        let mut last = 0;
        for cap in placeholder_re().captures_iter(&self.body) {
            let whole = cap.get(0).expect("match");
            out.push_str(&self.body[last..whole.start()]);
            out.push_str(&bindings.0[&cap[1]]);
            last = whole.end();
        }
        out.push_str(&self.body[last..]);
        Ok(out)
    }
}

/// Placeholder values.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Bindings(BTreeMap<String, String>);

impl Bindings {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(mut self, key: &str, value: impl Display) -> Self {
        self.insert(key, value);
        self
    }

    pub fn insert(&mut self, key: &str, value: impl Display) {
        self.0.insert(key.to_string(), value.to_string());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }
}

/// The shipped prompt assets.
pub mod templates {
    use super::PromptTemplate;

    pub const INTENT: &str = include_str!("../../prompts/intent.txt");
    pub const INTENT_FIRST_ROUND: &str = include_str!("../../prompts/intent_first_round.txt");
    pub const SUMMARIZER: &str = include_str!("../../prompts/summarizer.txt");
    pub const COORDINATOR: &str = include_str!("../../prompts/coordinator.txt");
    pub const COORDINATOR_CANDIDATE: &str = include_str!("../../prompts/coordinator_candidate.txt");
    pub const COORDINATOR_GRAPH: &str = include_str!("../../prompts/coordinator_graph.txt");
    pub const EVALUATOR: &str = include_str!("../../prompts/evaluator.txt");
    pub const MEMBER: &str = include_str!("../../prompts/member.txt");
    pub const PARAPHRASE: &str = include_str!("../../prompts/paraphrase.txt");

    /// Numbered coordinator instructions. The trailing spaces are part of
    /// the original wording.
    pub const RULE_KEEP_CANDIDATE: &str = "You must always list the candidate option provided below.  ";
    pub const RULE_NEW_OPTIONS: &str = "You should suggest at most {K - 1} options that is different than the candidate option and can satisfy at least {num_candidate_users} users.";
    pub const RULE_FIRST_ROUND: &str = "Each option you suggest should satisfy the preferences of at least 2 users.";
    pub const RULE_REQUIRED: &str = "If the organizer mentions that some user is needed to attend, then at least one option must work for this user.";
    pub const RULE_TEAMS: &str = "You should prefer options where the attendees are collaborators or teammates by using information from the relationships between the employees.";
    pub const RULE_MANAGERS: &str = "You should prefer options that work both for users and their managers by using information from the relationships of the employees. ";

    pub fn intent(first_round: bool) -> PromptTemplate {
        if first_round {
            PromptTemplate::new("intent-first-round", INTENT_FIRST_ROUND)
        } else {
            PromptTemplate::new("intent", INTENT)
        }
    }

    pub fn summarizer() -> PromptTemplate {
        PromptTemplate::new("summarizer", SUMMARIZER)
    }

    pub fn coordinator() -> PromptTemplate {
        PromptTemplate::new("coordinator", COORDINATOR)
    }

    pub fn coordinator_candidate() -> PromptTemplate {
        PromptTemplate::new("coordinator-candidate", COORDINATOR_CANDIDATE)
    }

    pub fn coordinator_graph() -> PromptTemplate {
        PromptTemplate::new("coordinator-graph", COORDINATOR_GRAPH)
    }

    pub fn evaluator() -> PromptTemplate {
        PromptTemplate::new("evaluator", EVALUATOR)
    }

    pub fn member() -> PromptTemplate {
        PromptTemplate::new("member", MEMBER)
    }

    pub fn paraphrase() -> PromptTemplate {
        PromptTemplate::new("paraphrase", PARAPHRASE)
    }
}
