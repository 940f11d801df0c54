//! The multi-round session: elicit, summarize, propose, evaluate, select.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use chrono::{Duration, NaiveDateTime};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backend::{Backend, CallSite, ModelParams};
use crate::coordination::{
    evaluate, parse_required_attendees, propose_options, validate_options, CoordinationContext, OptionSet,
    ProposedOption, Violation,
};
use crate::dialogue::{run_elicitation, split_sentences, summarize, Conversation, Elicitation, PreferenceSet, SimulatedMember};
use crate::metrics::{satisfied_count, GiniMode, RoundMetrics, ScoreMatrix};
use crate::model::{CompanyFixture, KnowledgeGraph, Meeting, MemberId};
use crate::schedule::{SlotUniverse, TimeSlot};
use crate::sim::SimWorld;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SessionMode {
    /// Every round elicits, proposes and evaluates.
    #[default]
    Full,
    /// One round with conversations.
    SingleRoundConversational,
    /// One round; the coordinator gets the raw preference text.
    SingleRoundNonConversational,
}

impl SessionMode {
    pub const ALL: [SessionMode; 3] = [
        SessionMode::SingleRoundNonConversational,
        SessionMode::SingleRoundConversational,
        SessionMode::Full,
    ];

    pub fn is_single_round(self) -> bool {
        self != SessionMode::Full
    }

    pub fn is_conversational(self) -> bool {
        self != SessionMode::SingleRoundNonConversational
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SessionMode::Full => "full",
            SessionMode::SingleRoundConversational => "single-round-conversational",
            SessionMode::SingleRoundNonConversational => "single-round-non-conversational",
        }
    }

    /// Column heading in comparison tables.
    pub fn label(self) -> &'static str {
        match self {
            SessionMode::Full => "Proposed System",
            SessionMode::SingleRoundConversational => "Single-Round Conversational",
            SessionMode::SingleRoundNonConversational => "Single-Round Non-Conversational",
        }
    }
}

impl fmt::Display for SessionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SessionMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SessionMode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| format!("unknown mode {s:?}"))
    }
}

/// Per-scenario knobs shared by every session of a cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionOptions {
    pub k: usize,
    pub rounds: u32,
    pub use_knowledge_graph: bool,
    pub mode: SessionMode,
    pub max_turns: usize,
    pub gini: GiniMode,
    /// Attach structured ground truth for the simulation.
    pub simulate: bool,
    pub params: ModelParams,
}

impl Default for SessionOptions {
    fn default() -> Self {
        Self {
            k: 2,
            rounds: 4,
            use_knowledge_graph: false,
            mode: SessionMode::Full,
            max_turns: crate::dialogue::DEFAULT_MAX_TURNS,
            gini: GiniMode::Standard,
            simulate: true,
            params: ModelParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionConfig {
    pub scenario_id: String,
    pub seed: u64,
    pub meeting: Meeting,
    pub members: Vec<SimulatedMember>,
    pub options: SessionOptions,
    pub invite: String,
    pub invite_time: NaiveDateTime,
    /// Knowledge graph induced on the meeting members.
    pub graph: KnowledgeGraph,
}

impl SessionConfig {
    /// Resolves a meeting of `fixture` into a runnable session.
    pub fn for_meeting(
        scenario_id: impl Into<String>,
        fixture: &CompanyFixture,
        graph: &KnowledgeGraph,
        meeting: &Meeting,
        seed: u64,
        options: SessionOptions,
    ) -> Result<Self, ProtocolError> {
        let index = fixture.employee_index();
        let mut members = Vec::with_capacity(meeting.members.len());
        for id in &meeting.members {
            let profile = index
                .get(id)
                .ok_or_else(|| ProtocolError::Config(format!("meeting member {id} is not an employee")))?;
            members.push(SimulatedMember::from_profile(profile, &fixture.company, graph, options.simulate));
        }
        let ids: BTreeSet<MemberId> = meeting.members.iter().cloned().collect();
        let subgraph = graph
            .induce(&ids)
            .map_err(|e| ProtocolError::Config(format!("cannot induce subgraph: {e}")))?;
        let required = if options.use_knowledge_graph {
            members
                .iter()
                .max_by_key(|m| (m.profile.level, std::cmp::Reverse(m.id().clone())))
                .map(|m| m.id().clone())
        } else {
            None
        };
        let lead_days = 1 + (seed % 3) as i64;
        let invite_time = (meeting.date - Duration::days(lead_days))
            .and_hms_opt(9, 0, 0)
            .expect("valid time");
        let config = Self {
            scenario_id: scenario_id.into(),
            seed,
            invite: compose_invite(meeting, required.as_ref()),
            meeting: meeting.clone(),
            members,
            options,
            invite_time,
            graph: subgraph,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ProtocolError> {
        let n = self.members.len();
        let o = &self.options;
        if o.k == 0 {
            return Err(ProtocolError::Config("K must be at least 1".into()));
        }
        if n <= o.k {
            return Err(ProtocolError::Config(format!("need n > K, got n={n}, K={}", o.k)));
        }
        if o.rounds == 0 {
            return Err(ProtocolError::Config("T must be at least 1".into()));
        }
        if o.max_turns == 0 {
            return Err(ProtocolError::Config("max_turns must be at least 1".into()));
        }
        if o.simulate && self.members.iter().any(|m| m.ground_truth.is_none()) {
            return Err(ProtocolError::Config("simulated run without member ground truth".into()));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.members.len()
    }

    /// T, or 1 for the single-round modes.
    pub fn effective_rounds(&self) -> u32 {
        if self.options.mode.is_single_round() {
            1
        } else {
            self.options.rounds
        }
    }

    pub fn member_ids(&self) -> Vec<MemberId> {
        self.members.iter().map(|m| m.id().clone()).collect()
    }

    pub fn world(&self) -> SimWorld {
        SimWorld {
            universe: SlotUniverse::new(self.meeting.date, self.meeting.duration_minutes),
            invite_time: self.invite_time,
            organizer: self.meeting.organizer.clone(),
            subject: self.meeting.subject.clone(),
        }
    }
}

/// The organizer's invite text.
pub fn compose_invite(meeting: &Meeting, required: Option<&MemberId>) -> String {
    let mut text = format!(
        "Hi all,\n\nI would like to schedule a {}-minute meeting about \"{}\" on {}. Please let me know which times work for you.",
        meeting.duration_minutes,
        meeting.subject,
        meeting.date.format("%A, %B %-d, %Y"),
    );
    if let Some(r) = required {
        text.push_str(&format!("\n{r} must attend."));
    }
    text.push_str(&format!("\n\nBest,\n{}", meeting.organizer));
    text
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Setup,
    Paraphrase,
    Elicitation,
    Summarization,
    Coordination,
    Evaluation,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Stage::Setup => "setup",
            Stage::Paraphrase => "paraphrase",
            Stage::Elicitation => "elicitation",
            Stage::Summarization => "summarization",
            Stage::Coordination => "coordination",
            Stage::Evaluation => "evaluation",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("invalid session config: {0}")]
    Config(String),
    #[error("round {round} {stage} failed: {message}")]
    Round { round: u32, stage: Stage, message: String },
}

/// Everything produced so far in one session.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SessionState {
    pub round: u32,
    pub option_sets: Vec<OptionSet>,
    pub candidates: Vec<usize>,
    pub preferences: Vec<Vec<PreferenceSet>>,
    pub conversations: Vec<Vec<Conversation>>,
    pub matrices: Vec<ScoreMatrix>,
    pub metrics: Vec<RoundMetrics>,
    pub violations: Vec<Vec<Violation>>,
}

impl SessionState {
    pub fn candidate(&self) -> Option<&ProposedOption> {
        let (options, &idx) = (self.option_sets.last()?, self.candidates.last()?);
        options.options.get(idx)
    }

    /// Members with a positive score on the current candidate.
    pub fn candidate_users(&self) -> usize {
        match (self.matrices.last(), self.candidates.last()) {
            (Some(m), Some(&idx)) => satisfied_count(m.row(idx)),
            _ => 0,
        }
    }

    fn proposed_slots(&self) -> Vec<TimeSlot> {
        let mut out: Vec<TimeSlot> = Vec::new();
        for set in &self.option_sets {
            for s in set.options.iter().filter_map(|o| o.slot) {
                if !out.contains(&s) {
                    out.push(s);
                }
            }
        }
        out
    }
}

fn stage_err(round: u32, stage: Stage, e: impl fmt::Display) -> ProtocolError {
    ProtocolError::Round {
        round,
        stage,
        message: e.to_string(),
    }
}

/// Runs round `state.round + 1` and appends its artifacts. On error the
/// state is left at the previous round.
pub fn run_round(state: &mut SessionState, config: &SessionConfig, backend: &dyn Backend) -> Result<(), ProtocolError> {
    let t = state.round + 1;
    let opts = &config.options;
    let site = CallSite::new(&config.scenario_id, t, &opts.params);
    let world = opts.simulate.then(|| config.world());
    let previous = state.option_sets.last();

    let mut conversations = Vec::new();
    let mut preferences = Vec::with_capacity(config.n());
    if opts.mode.is_conversational() {
        for member in &config.members {
            let setup = Elicitation {
                member,
                invite: &config.invite,
                options: previous,
                world: world.as_ref(),
                max_turns: opts.max_turns,
            };
            let conv = run_elicitation(&setup, backend, &site).map_err(|e| stage_err(t, Stage::Elicitation, e))?;
            let prefs = summarize(&conv, member, backend, &site).map_err(|e| stage_err(t, Stage::Summarization, e))?;
            conversations.push(conv);
            preferences.push(prefs);
        }
    } else {
        for member in &config.members {
            preferences.push(PreferenceSet {
                member: member.id().clone(),
                round: t,
                preferences: split_sentences(&member.preference_text),
                agreed_option: None,
                rules: member.ground_truth.clone().unwrap_or_default(),
            });
        }
    }
    let avg_interactions = (!conversations.is_empty()).then(|| {
        conversations.iter().map(|c: &Conversation| c.member_turns()).sum::<usize>() as f64 / conversations.len() as f64
    });

    let member_ids = config.member_ids();
    let ctx = CoordinationContext {
        round: t,
        k: opts.k,
        invite: config.invite.clone(),
        required_attendees: parse_required_attendees(&config.invite, &member_ids),
        members: member_ids,
        preferences,
        candidate: state.candidate().cloned(),
        candidate_users: state.candidate_users(),
        use_knowledge_graph: opts.use_knowledge_graph,
        graph: opts.use_knowledge_graph.then(|| config.graph.clone()),
        proposed: state.proposed_slots(),
        world: world.clone(),
    };
    let (options, mut violations) =
        propose_options(&ctx, backend, &site).map_err(|e| stage_err(t, Stage::Coordination, e))?;
    let (matrix, score_violations) = evaluate(&ctx.preferences, &options, world.as_ref(), backend, &site)
        .map_err(|e| stage_err(t, Stage::Evaluation, e))?;
    violations.extend(score_violations);
    violations.extend(validate_options(&options, &matrix, &ctx));
    for v in &violations {
        log::debug!("{} round {t}: {:?}", config.scenario_id, v.kind);
    }

    let metrics = RoundMetrics::compute(t, &matrix, opts.gini, avg_interactions, violations.len());
    state.round = t;
    state.candidates.push(metrics.candidate_index);
    state.option_sets.push(options);
    state.preferences.push(ctx.preferences);
    state.conversations.push(conversations);
    state.matrices.push(matrix);
    state.metrics.push(metrics);
    state.violations.push(violations);
    Ok(())
}

/// One round of a finished session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub metrics: RoundMetrics,
    pub options: OptionSet,
    pub scores: ScoreMatrix,
    pub preferences: Vec<PreferenceSet>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub conversations: Vec<Conversation>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub violations: Vec<Violation>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum SessionStatus {
    Completed,
    Failed { round: u32, stage: Stage, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionResult {
    pub scenario_id: String,
    pub seed: u64,
    pub mode: SessionMode,
    pub n: usize,
    pub k: usize,
    pub use_knowledge_graph: bool,
    pub meeting: Meeting,
    pub rounds: Vec<RoundRecord>,
    pub final_candidate: Option<ProposedOption>,
    pub status: SessionStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transcript: Option<String>,
}

impl SessionResult {
    pub fn is_completed(&self) -> bool {
        self.status == SessionStatus::Completed
    }

    /// A scenario that never got to run.
    pub fn failed_setup(config: &SessionConfig, stage: Stage, message: impl Into<String>) -> Self {
        finish(
            config,
            SessionState::default(),
            SessionStatus::Failed {
                round: 0,
                stage,
                message: message.into(),
            },
        )
    }

    pub fn final_metrics(&self) -> Option<&RoundMetrics> {
        self.rounds.last().map(|r| &r.metrics)
    }
}

/// Runs every round. Round failures end the session early with
/// [`SessionStatus::Failed`]; completed rounds are kept.
pub fn run_session(config: &SessionConfig, backend: &dyn Backend) -> Result<SessionResult, ProtocolError> {
    config.validate()?;
    let mut state = SessionState::default();
    let mut status = SessionStatus::Completed;
    for _ in 0..config.effective_rounds() {
        match run_round(&mut state, config, backend) {
            Ok(()) => {}
            Err(ProtocolError::Round { round, stage, message }) => {
                log::warn!("{}: round {round} {stage} failed: {message}", config.scenario_id);
                status = SessionStatus::Failed { round, stage, message };
                break;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(finish(config, state, status))
}

fn finish(config: &SessionConfig, state: SessionState, status: SessionStatus) -> SessionResult {
    let final_candidate = state.candidate().cloned();
    let SessionState {
        option_sets,
        preferences,
        conversations,
        matrices,
        metrics,
        violations,
        ..
    } = state;
    let rounds = metrics
        .into_iter()
        .zip(option_sets)
        .zip(matrices)
        .zip(preferences)
        .zip(conversations)
        .zip(violations)
        .map(|(((((metrics, options), scores), preferences), conversations), violations)| RoundRecord {
            metrics,
            options,
            scores,
            preferences,
            conversations,
            violations,
        })
        .collect();
    SessionResult {
        scenario_id: config.scenario_id.clone(),
        seed: config.seed,
        mode: config.options.mode,
        n: config.n(),
        k: config.options.k,
        use_knowledge_graph: config.options.use_knowledge_graph,
        meeting: config.meeting.clone(),
        rounds,
        final_candidate,
        status,
        transcript: None,
    }
}
