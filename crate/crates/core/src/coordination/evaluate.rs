use super::option::OptionSet;
use super::propose::preferences_json;
use super::{CoordinationError, Violation, ViolationKind};
use crate::backend::{tags, Backend, CallSite, ChatMessage};
use crate::dialogue::{extract_json, templates, Bindings, PreferenceSet};
use crate::metrics::{parse_scores, ScoreMatrix};
use crate::model::MemberId;
use crate::sim::{MemberRules, SimContext, SimWorld};

pub fn render_evaluator_prompt(preferences: &[PreferenceSet], options: &OptionSet) -> Result<String, CoordinationError> {
    Ok(templates::evaluator().render(
        &Bindings::new()
            .set("summarized_preferences", preferences_json(preferences))
            .set("coordinator_options", options.to_prompt_json()),
    )?)
}

/// Scores every option for every member.
pub fn evaluate(
    preferences: &[PreferenceSet],
    options: &OptionSet,
    world: Option<&SimWorld>,
    backend: &dyn Backend,
    site: &CallSite<'_>,
) -> Result<(ScoreMatrix, Vec<Violation>), CoordinationError> {
    let prompt = render_evaluator_prompt(preferences, options)?;
    let mut request = site.request(tags::EVALUATOR, None, vec![ChatMessage::system(prompt)]);
    if let Some(world) = world {
        request = request.with_context(
            SimContext::Evaluator {
                preferences: preferences
                    .iter()
                    .map(|p| MemberRules {
                        member: p.member.clone(),
                        rules: p.rules.clone(),
                    })
                    .collect(),
                world: world.clone(),
                options: options.views(),
            }
            .to_value(),
        );
    }
    let text = backend.complete(&request)?.text;
    let members: Vec<MemberId> = preferences.iter().map(|p| p.member.clone()).collect();
    parse_evaluation(&text, options, &members)
}

/// Evaluator text to a score matrix; repairs become violations.
pub fn parse_evaluation(
    text: &str,
    options: &OptionSet,
    members: &[MemberId],
) -> Result<(ScoreMatrix, Vec<Violation>), CoordinationError> {
    let unusable = |detail: String| CoordinationError::Unparseable {
        stage: "evaluator",
        detail,
    };
    let value = extract_json(text).map_err(|e| unusable(e.to_string()))?;
    let (matrix, issues) = parse_scores(&value, &options.keys(), members).map_err(|e| unusable(e.to_string()))?;
    let violations = issues
        .into_iter()
        .map(|issue| Violation::new(options.round, ViolationKind::Score { issue }))
        .collect();
    Ok((matrix, violations))
}
