//! Deterministic stand-in for the language model.
//!
//! Every simulated call receives a structured sidecar ([`SimContext`]) next
//! to the rendered prompt and answers with the same kind of text a model
//! would: free text for the conversational roles, JSON for the summarizer,
//! coordinator and evaluator. The pipeline parses that text exactly as it
//! parses live output, so transcripts and replay behave the same in both
//! modes.

mod backend;
mod policy;

use chrono::{NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};

use crate::model::MemberId;
use crate::schedule::{PreferenceRule, SlotUniverse, TimeSlot};

pub use backend::SimulatedBackend;
pub use policy::{
    agreed_option, assistant_reply, evaluator_scores, member_reply, member_score, mock_rewrite, ACCEPT_SUFFIX,
    REJECTION_PREFIX,
    SUGGESTION_PREFIX,
};

/// Facts about the meeting the simulation needs beyond the prompts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimWorld {
    pub universe: SlotUniverse,
    pub invite_time: NaiveDateTime,
    pub organizer: MemberId,
    pub subject: String,
}

impl SimWorld {
    pub fn date(&self) -> NaiveDate {
        self.universe.date
    }

    /// Slot named by an option: its structured slot, else its text.
    pub fn resolve(&self, option: &OptionView) -> Option<TimeSlot> {
        option.slot.or_else(|| {
            TimeSlot::parse_suggestion(&option.suggestion, self.universe.date, self.universe.duration_minutes)
        })
    }
}

/// An option as the simulation sees it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OptionView {
    pub id: String,
    pub suggestion: String,
    #[serde(default)]
    pub slot: Option<TimeSlot>,
    #[serde(default)]
    pub reasons: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemberRules {
    pub member: MemberId,
    pub rules: Vec<PreferenceRule>,
}

/// Structured sidecar attached to a request, one variant per caller.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "sim", rename_all = "snake_case")]
pub enum SimContext {
    Intent {
        member: MemberId,
        world: SimWorld,
        options: Vec<OptionView>,
    },
    Member {
        rules: Vec<PreferenceRule>,
        world: SimWorld,
        options: Vec<OptionView>,
    },
    Summarizer {
        rules: Vec<PreferenceRule>,
        member_messages: Vec<String>,
    },
    Coordinator {
        round: u32,
        k: usize,
        preferences: Vec<MemberRules>,
        world: SimWorld,
        candidate: Option<OptionView>,
        candidate_users: usize,
        /// Slots proposed in earlier rounds.
        proposed: Vec<TimeSlot>,
        required: Vec<MemberId>,
    },
    Evaluator {
        preferences: Vec<MemberRules>,
        world: SimWorld,
        options: Vec<OptionView>,
    },
    Paraphrase {
        text: String,
    },
}

impl SimContext {
    pub fn to_value(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("sim context serializes")
    }
}
