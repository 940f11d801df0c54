use super::prompt::{templates, Bindings};
use super::DialogueError;
use crate::backend::{tags, Backend, CallSite, ChatMessage};
use crate::model::MemberId;
use crate::sim::SimContext;

pub fn render_paraphrase_prompt(text: &str) -> Result<String, DialogueError> {
    Ok(templates::paraphrase().render(&Bindings::new().set("preferences", text))?)
}

/// Paraphrases `text` `times` times in sequence, each pass rewording the
/// previous output. `times == 0` returns the text unchanged without a call.
pub fn paraphrase(
    text: &str,
    times: usize,
    member: Option<&MemberId>,
    backend: &dyn Backend,
    site: &CallSite<'_>,
) -> Result<String, DialogueError> {
    let mut current = text.to_string();
    for _ in 0..times {
        let prompt = render_paraphrase_prompt(&current)?;
        let request = site
            .request(tags::PARAPHRASE, member, vec![ChatMessage::system(prompt)])
            .with_context(SimContext::Paraphrase { text: current.clone() }.to_value());
        let out = backend.complete(&request)?.text;
        let out = out.trim();
        if out.is_empty() {
            return Err(DialogueError::Paraphrase("empty paraphrase".into()));
        }
        current = out.to_string();
    }
    Ok(current)
}
