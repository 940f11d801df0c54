use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::metrics::OptionKey;
use crate::model::MemberId;
use crate::schedule::TimeSlot;
use crate::sim::OptionView;

/// One proposal for the group decision.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProposedOption {
    /// `option1`, `option2`, ... in list order.
    pub id: String,
    pub suggestion: String,
    pub satisfied_members: Vec<MemberId>,
    pub reasons: Vec<String>,
    /// Slot behind the suggestion, when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slot: Option<TimeSlot>,
}

impl ProposedOption {
    pub fn view(&self) -> OptionView {
        OptionView {
            id: self.id.clone(),
            suggestion: self.suggestion.clone(),
            slot: self.slot,
            reasons: self.reasons.clone(),
        }
    }
}

/// The options of one round, at most K of them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OptionSet {
    pub round: u32,
    pub options: Vec<ProposedOption>,
    /// Id of the previous round's candidate, from round 2 on.
    #[serde(default)]
    pub carried_candidate: Option<String>,
}

impl OptionSet {
    pub fn len(&self) -> usize {
        self.options.len()
    }

    pub fn is_empty(&self) -> bool {
        self.options.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&ProposedOption> {
        self.options.iter().find(|o| o.id == id)
    }

    pub fn keys(&self) -> Vec<OptionKey> {
        self.options
            .iter()
            .map(|o| OptionKey {
                id: o.id.clone(),
                suggestion: o.suggestion.clone(),
            })
            .collect()
    }

    pub fn views(&self) -> Vec<OptionView> {
        self.options.iter().map(ProposedOption::view).collect()
    }

    /// The coordinator's output schema, used wherever options are shown to
    /// a model.
    pub fn to_prompt_value(&self) -> Value {
        let mut map = Map::new();
        for o in &self.options {
            map.insert(o.id.clone(), option_prompt_value(o));
        }
        Value::Object(map)
    }

    pub fn to_prompt_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_prompt_value()).expect("options serialize")
    }
}

pub(crate) fn option_prompt_value(o: &ProposedOption) -> Value {
    json!({
        "option": o.suggestion,
        "users": o.satisfied_members,
        "reasons": o.reasons,
    })
}

pub(crate) fn option_id(index: usize) -> String {
    format!("option{}", index + 1)
}
