use serde::{Deserialize, Serialize};

use super::member::SimulatedMember;
use super::prompt::{templates, Bindings};
use super::DialogueError;
use crate::backend::{tags, Backend, CallSite, ChatMessage};
use crate::coordination::OptionSet;
use crate::model::MemberId;
use crate::sim::{SimContext, SimWorld};

/// Literal the assistant emits when the member has said enough.
pub const EXIT_SENTINEL: &str = "<EXIT>";

pub const DEFAULT_MAX_TURNS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Speaker {
    Assistant,
    Member,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Turn {
    pub speaker: Speaker,
    pub text: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    ExitSentinel,
    MaxTurns,
    Error,
}

/// One member's elicitation dialogue in one round.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Conversation {
    pub member: MemberId,
    pub round: u32,
    pub turns: Vec<Turn>,
    pub terminated_by: Termination,
}

impl Conversation {
    /// Member-authored messages; the interaction count of this dialogue.
    pub fn member_turns(&self) -> usize {
        self.turns.iter().filter(|t| t.speaker == Speaker::Member).count()
    }

    pub fn member_messages(&self) -> Vec<String> {
        self.turns
            .iter()
            .filter(|t| t.speaker == Speaker::Member)
            .map(|t| t.text.clone())
            .collect()
    }

    /// `AI assistant: ...` / `<member>: ...` lines for the summarizer.
    pub fn chat_history(&self) -> String {
        self.turns
            .iter()
            .map(|t| match t.speaker {
                Speaker::Assistant => format!("AI assistant: {}", t.text),
                Speaker::Member => format!("{}: {}", self.member, t.text),
            })
            .collect::<Vec<_>>()
            .join("\n")
    }
}

pub struct Elicitation<'a> {
    pub member: &'a SimulatedMember,
    pub invite: &'a str,
    /// The previous round's options; `None` in round 1.
    pub options: Option<&'a OptionSet>,
    /// Present when the run is simulated.
    pub world: Option<&'a SimWorld>,
    pub max_turns: usize,
}

pub fn render_intent_prompt(invite: &str, options: Option<&OptionSet>) -> Result<String, DialogueError> {
    let text = match options {
        None => templates::intent(true).render(&Bindings::new().set("message", invite))?,
        Some(opts) => templates::intent(false).render(
            &Bindings::new()
                .set("message", invite)
                .set("coordinator_options", opts.to_prompt_json()),
        )?,
    };
    Ok(text)
}

/// Alternates assistant and member turns until the assistant emits
/// [`EXIT_SENTINEL`] or the member has spoken `max_turns` times.
pub fn run_elicitation(
    setup: &Elicitation<'_>,
    backend: &dyn Backend,
    site: &CallSite<'_>,
) -> Result<Conversation, DialogueError> {
    if setup.max_turns == 0 {
        return Err(DialogueError::Config("max_turns must be at least 1".into()));
    }
    let member = setup.member;
    let id = member.id();
    let intent_prompt = render_intent_prompt(setup.invite, setup.options)?;
    let member_prompt = member.render_prompt()?;
    let views = setup.options.map(OptionSet::views).unwrap_or_default();
    let sim = match (setup.world, &member.ground_truth) {
        (Some(world), Some(rules)) => Some((
            SimContext::Intent {
                member: id.clone(),
                world: world.clone(),
                options: views.clone(),
            }
            .to_value(),
            SimContext::Member {
                rules: rules.clone(),
                world: world.clone(),
                options: views,
            }
            .to_value(),
        )),
        _ => None,
    };

    let mut conv = Conversation {
        member: id.clone(),
        round: site.round,
        turns: Vec::new(),
        terminated_by: Termination::Error,
    };
    let fail = |conv: Conversation, source| DialogueError::Elicitation {
        member: id.clone(),
        conversation: Box::new(conv),
        source,
    };

    let assistant_messages = |turns: &[Turn]| {
        let mut msgs = vec![ChatMessage::system(intent_prompt.clone())];
        msgs.extend(turns.iter().map(|t| match t.speaker {
            Speaker::Assistant => ChatMessage::assistant(t.text.clone()),
            Speaker::Member => ChatMessage::user(t.text.clone()),
        }));
        msgs
    };
    let member_messages = |turns: &[Turn]| {
        let mut msgs = vec![ChatMessage::system(member_prompt.clone())];
        msgs.extend(turns.iter().map(|t| match t.speaker {
            Speaker::Assistant => ChatMessage::user(t.text.clone()),
            Speaker::Member => ChatMessage::assistant(t.text.clone()),
        }));
        msgs
    };

    loop {
        let mut request = site.request(tags::INTENT, Some(id), assistant_messages(&conv.turns));
        if let Some((ctx, _)) = &sim {
            request = request.with_context(ctx.clone());
        }
        let reply = match backend.complete(&request) {
            Ok(c) => c.text,
            Err(e) => return Err(fail(conv, e)),
        };
        let done = reply.contains(EXIT_SENTINEL);
        conv.turns.push(Turn {
            speaker: Speaker::Assistant,
            text: reply,
        });
        if done {
            conv.terminated_by = Termination::ExitSentinel;
            return Ok(conv);
        }
        if conv.member_turns() >= setup.max_turns {
            conv.terminated_by = Termination::MaxTurns;
            return Ok(conv);
        }

        let mut request = site.request(tags::MEMBER, Some(id), member_messages(&conv.turns));
        if let Some((_, ctx)) = &sim {
            request = request.with_context(ctx.clone());
        }
        let reply = match backend.complete(&request) {
            Ok(c) => c.text,
            Err(e) => return Err(fail(conv, e)),
        };
        conv.turns.push(Turn {
            speaker: Speaker::Member,
            text: reply,
        });
    }
}
