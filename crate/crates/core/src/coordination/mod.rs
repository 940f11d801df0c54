//! Proposing options, scoring them, and checking the proposals against the
//! protocol's rules.

mod evaluate;
mod greedy;
mod option;
mod propose;
mod validate;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backend::BackendError;
use crate::dialogue::PromptError;
use crate::metrics::ScoreIssue;
use crate::model::MemberId;

pub use evaluate::{evaluate, parse_evaluation, render_evaluator_prompt};
pub use greedy::{acceptance_coverage, greedy_options, rank_slots, GreedyInput};
pub use option::{OptionSet, ProposedOption};
pub use propose::{
    parse_coordinator_output, parse_option_set, parse_required_attendees, preferences_json, propose_options, render_coordinator_prompt,
    CoordinationContext,
};
pub use validate::validate_options;

/// A broken protocol rule or a repair applied to model output. Recorded,
/// never fatal.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub round: u32,
    pub kind: ViolationKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ViolationKind {
    /// Round 1 option with fewer than two members scoring above 0.
    TooFewSatisfied { option: String, satisfied: usize },
    /// New option satisfying fewer members than the carried candidate did.
    BelowCandidate {
        option: String,
        satisfied: usize,
        required: usize,
    },
    /// A member the organizer requires scores 0 on every option.
    RequiredAttendeeUnsatisfied { member: MemberId },
    /// More than K options proposed; the extra ones were dropped.
    TooManyOptions { proposed: usize, max: usize },
    /// The carried candidate was missing and has been inserted first.
    CandidateInserted { suggestion: String },
    /// The carried candidate was listed at `from` and moved first.
    CandidateMoved { from: usize },
    UnknownMember { option: String, name: String },
    DuplicateOption { suggestion: String },
    MissingReasons { option: String },
    MalformedOption { detail: String },
    Score { issue: ScoreIssue },
}

impl Violation {
    pub fn new(round: u32, kind: ViolationKind) -> Self {
        Self { round, kind }
    }
}

#[derive(Debug, Error)]
pub enum CoordinationError {
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error("unusable {stage} output: {detail}")]
    Unparseable { stage: &'static str, detail: String },
    #[error("coordinator proposed no usable options")]
    NoOptions,
    #[error("invalid coordination context: {0}")]
    Context(String),
}
