use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::conversation::Conversation;
use super::json::extract_json;
use super::member::SimulatedMember;
use super::prompt::{templates, Bindings};
use super::DialogueError;
use crate::backend::{tags, Backend, CallSite, ChatMessage};
use crate::model::MemberId;
use crate::schedule::PreferenceRule;
use crate::sim::SimContext;

/// What one member wants, as extracted in one round.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreferenceSet {
    pub member: MemberId,
    pub round: u32,
    pub preferences: Vec<String>,
    #[serde(default)]
    pub agreed_option: Option<String>,
    /// Structured form of `preferences`; only the simulation fills it.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rules: Vec<PreferenceRule>,
}

pub fn render_summarizer_prompt(conversation: &Conversation) -> Result<String, DialogueError> {
    Ok(templates::summarizer().render(
        &Bindings::new()
            .set("member.name", &conversation.member)
            .set("chat_history", conversation.chat_history()),
    )?)
}

/// Condenses a conversation into a [`PreferenceSet`].
pub fn summarize(
    conversation: &Conversation,
    member: &SimulatedMember,
    backend: &dyn Backend,
    site: &CallSite<'_>,
) -> Result<PreferenceSet, DialogueError> {
    if conversation.turns.is_empty() {
        return Err(DialogueError::Summary {
            member: conversation.member.clone(),
            message: "empty conversation".into(),
        });
    }
    let prompt = render_summarizer_prompt(conversation)?;
    let mut request = site.request(tags::SUMMARIZER, Some(&conversation.member), vec![ChatMessage::system(prompt)]);
    if let Some(rules) = &member.ground_truth {
        request = request.with_context(
            SimContext::Summarizer {
                rules: rules.clone(),
                member_messages: conversation.member_messages(),
            }
            .to_value(),
        );
    }
    let text = backend.complete(&request)?.text;
    parse_summary(&text, &conversation.member, conversation.round)
}

/// Reads `{"preferences": [...], "option": ...}` from summarizer output.
pub fn parse_summary(text: &str, member: &MemberId, round: u32) -> Result<PreferenceSet, DialogueError> {
    let fail = |message: String| DialogueError::Summary {
        member: member.clone(),
        message,
    };
    let value = extract_json(text).map_err(|e| fail(e.to_string()))?;
    let obj = value
        .as_object()
        .ok_or_else(|| fail(format!("expected an object, got {value}")))?;
    let preferences = match obj.get("preferences") {
        Some(Value::Array(items)) => items.iter().filter_map(as_text).collect(),
        Some(Value::String(s)) if !s.trim().is_empty() => vec![s.trim().to_string()],
        Some(Value::String(_)) | Some(Value::Null) => Vec::new(),
        Some(other) => return Err(fail(format!("\"preferences\" is {other}"))),
        None => return Err(fail("missing \"preferences\"".into())),
    };
    if preferences.is_empty() {
        log::warn!("summary for {member} in round {round} has no preferences");
    }
    let agreed_option = match obj.get("option") {
        Some(Value::Array(items)) => items.iter().find_map(as_text),
        Some(Value::Object(o)) => o.get("option").and_then(as_text),
        Some(v) => as_text(v),
        None => None,
    }
    .filter(|s| !matches!(s.to_lowercase().as_str(), "none" | "null" | "n/a" | ""));
    let rules = match obj.get("predicates") {
        Some(v) => serde_json::from_value(v.clone()).unwrap_or_else(|e| {
            log::warn!("ignoring malformed predicates for {member}: {e}");
            Vec::new()
        }),
        None => Vec::new(),
    };
    Ok(PreferenceSet {
        member: member.clone(),
        round,
        preferences,
        agreed_option,
        rules,
    })
}

fn as_text(v: &Value) -> Option<String> {
    match v {
        Value::String(s) => Some(s.trim().to_string()).filter(|s| !s.is_empty()),
        Value::Null => None,
        Value::Number(_) | Value::Bool(_) => Some(v.to_string()),
        other => Some(other.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m() -> MemberId {
        "Member 1".into()
    }

    #[test]
    fn parses_schema_and_variants() {
        let p = parse_summary(
            "```json\n{\"preferences\": [\"mornings only\"], \"option\": \"Feb 16, 10am\"}\n```",
            &m(),
            2,
        )
        .unwrap();
        assert_eq!(p.preferences, ["mornings only"]);
        assert_eq!(p.agreed_option.as_deref(), Some("Feb 16, 10am"));

        let p = parse_summary(r#"{"preferences": "late afternoon", "option": null}"#, &m(), 1).unwrap();
        assert_eq!(p.preferences, ["late afternoon"]);
        assert_eq!(p.agreed_option, None);

        let p = parse_summary(r#"{"preferences": [], "option": "None"}"#, &m(), 1).unwrap();
        assert_eq!(p.agreed_option, None);
    }

    #[test]
    fn rejects_unusable_output() {
        assert!(matches!(
            parse_summary("I could not summarize.", &m(), 1),
            Err(DialogueError::Summary { .. })
        ));
        assert!(parse_summary(r#"{"option": "x"}"#, &m(), 1).is_err());
    }
}
