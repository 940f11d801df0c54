//! Talking to members: prompt rendering, the elicitation loop, summaries,
//! paraphrases and JSON extraction from model output.

mod conversation;
mod json;
mod member;
mod paraphrase;
pub mod prompt;
mod summarize;

use thiserror::Error;

use crate::backend::BackendError;
use crate::model::MemberId;

pub use conversation::{
    render_intent_prompt, run_elicitation, Conversation, Elicitation, Speaker, Termination, Turn, DEFAULT_MAX_TURNS,
    EXIT_SENTINEL,
};
pub use json::{extract_json, JsonExtractError};
pub use member::{split_sentences, SimulatedMember};
pub use paraphrase::{paraphrase, render_paraphrase_prompt};
pub use prompt::{templates, Bindings, PromptError, PromptTemplate};
pub use summarize::{parse_summary, render_summarizer_prompt, summarize, PreferenceSet};

#[derive(Debug, Error)]
pub enum DialogueError {
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error("conversation with {member} failed after {} turns: {source}", conversation.turns.len())]
    Elicitation {
        member: MemberId,
        conversation: Box<Conversation>,
        #[source]
        source: BackendError,
    },
    #[error("summary for {member}: {message}")]
    Summary { member: MemberId, message: String },
    #[error("paraphrase: {0}")]
    Paraphrase(String),
    #[error("configuration: {0}")]
    Config(String),
}
