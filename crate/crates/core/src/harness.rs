//! Experiment orchestration: scenario sampling, grids of cells, baselines
//! and the paraphrase study.

use std::collections::BTreeSet;
use std::path::PathBuf;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::backend::{Backend, CallSite, ModelParams, Recording, TranscriptLog};
use crate::dialogue::{paraphrase, DEFAULT_MAX_TURNS};
use crate::metrics::GiniMode;
use crate::model::{generate_company, generate_meetings, CompanyFixture, KnowledgeGraph, Meeting, ModelError};
use crate::protocol::{run_session, SessionConfig, SessionMode, SessionOptions, SessionResult, Stage};

pub const PRESETS: [&str; 3] = ["grid", "baselines", "robustness"];
pub const DEFAULT_COMPANY_SIZE: usize = 34;

fn default_rounds() -> u32 {
    4
}

/// One (n, K, graph, mode) setting run over `scenarios` meetings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridCell {
    pub label: String,
    pub n: usize,
    pub k: usize,
    #[serde(default)]
    pub use_knowledge_graph: bool,
    #[serde(default)]
    pub mode: SessionMode,
    pub scenarios: usize,
    #[serde(default = "default_rounds")]
    pub rounds: u32,
    /// Cells sharing a group draw the same meetings. Defaults to the label.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_group: Option<String>,
}

impl GridCell {
    pub fn new(label: impl Into<String>, n: usize, k: usize, scenarios: usize) -> Self {
        Self {
            label: label.into(),
            n,
            k,
            use_knowledge_graph: false,
            mode: SessionMode::Full,
            scenarios,
            rounds: default_rounds(),
            sample_group: None,
        }
    }

    pub fn group(&self) -> &str {
        self.sample_group.as_deref().unwrap_or(&self.label)
    }

    /// Table heading for the setting, ignoring the mode.
    pub fn setting(&self) -> String {
        let mut s = format!("n = {}, K = {}", self.n, self.k);
        if self.use_knowledge_graph {
            s.push_str(" (w/ Knowledge Graph)");
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CompanySource {
    Generate { seed: u64, size: usize },
    File { path: PathBuf },
}

impl CompanySource {
    pub fn load(&self) -> Result<CompanyFixture, HarnessError> {
        Ok(match self {
            CompanySource::Generate { seed, size } => generate_company(*seed, *size)?,
            CompanySource::File { path } => CompanyFixture::load(path)?,
        })
    }
}

fn default_true() -> bool {
    true
}

fn default_max_turns() -> usize {
    DEFAULT_MAX_TURNS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub name: String,
    pub seed: u64,
    pub company: CompanySource,
    pub cells: Vec<GridCell>,
    /// Generate extra meetings when the fixture has too few of a size.
    #[serde(default = "default_true")]
    pub top_up: bool,
    #[serde(default = "default_max_turns")]
    pub max_turns: usize,
    #[serde(default)]
    pub gini: GiniMode,
    #[serde(default)]
    pub params: ModelParams,
    /// Paraphrase passes compared by the robustness study.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub paraphrase_counts: Vec<usize>,
}

fn table_cells(mode: SessionMode, scenarios: usize) -> Vec<GridCell> {
    let mut cells = vec![
        GridCell::new("n3-k2", 3, 2, scenarios),
        GridCell::new("n4-k2", 4, 2, scenarios),
        GridCell::new("n5-k2", 5, 2, scenarios),
        GridCell::new("n5-k3", 5, 3, scenarios),
        GridCell::new("n5-k4", 5, 4, scenarios),
        GridCell {
            use_knowledge_graph: true,
            ..GridCell::new("n5-k2-kg", 5, 2, scenarios)
        },
    ];
    for c in &mut cells {
        c.sample_group = Some(c.label.clone());
        if mode != SessionMode::Full {
            c.label = format!("{}-{}", c.label, mode);
            c.mode = mode;
            c.rounds = 1;
        }
    }
    cells
}

impl ExperimentPlan {
    pub fn new(name: impl Into<String>, seed: u64, cells: Vec<GridCell>) -> Self {
        Self {
            name: name.into(),
            seed,
            company: CompanySource::Generate {
                seed,
                size: DEFAULT_COMPANY_SIZE,
            },
            cells,
            top_up: true,
            max_turns: DEFAULT_MAX_TURNS,
            gini: GiniMode::Standard,
            params: ModelParams::default(),
            paraphrase_counts: Vec::new(),
        }
    }

    /// Named experiment presets; see [`PRESETS`].
    pub fn preset(name: &str, seed: u64) -> Option<Self> {
        let plan = match name {
            "grid" => Self::new(name, seed, table_cells(SessionMode::Full, 20)),
            "baselines" => {
                let mut cells = table_cells(SessionMode::Full, 20);
                cells.extend(table_cells(SessionMode::SingleRoundConversational, 20));
                cells.extend(table_cells(SessionMode::SingleRoundNonConversational, 20));
                Self::new(name, seed, cells)
            }
            "robustness" => {
                let mut cells = table_cells(SessionMode::SingleRoundNonConversational, 20);
                cells.truncate(1);
                let mut plan = Self::new(name, seed, cells);
                plan.paraphrase_counts = vec![0, 1, 2];
                plan
            }
            _ => return None,
        };
        Some(plan)
    }

    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let plan: Self = serde_json::from_str(text).map_err(|e| HarnessError::Plan(e.to_string()))?;
        plan.validate()?;
        Ok(plan)
    }

    pub fn total_sessions(&self) -> usize {
        self.cells.iter().map(|c| c.scenarios).sum()
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let mut labels = BTreeSet::new();
        if self.cells.is_empty() {
            return Err(HarnessError::Plan("plan has no cells".into()));
        }
        for c in &self.cells {
            if !labels.insert(c.label.as_str()) {
                return Err(HarnessError::Plan(format!("duplicate cell label {:?}", c.label)));
            }
            if c.scenarios == 0 {
                return Err(HarnessError::Plan(format!("cell {}: scenarios must be at least 1", c.label)));
            }
            if c.n <= c.k || c.k == 0 {
                return Err(HarnessError::Plan(format!("cell {}: need n > K >= 1", c.label)));
            }
            if c.rounds == 0 {
                return Err(HarnessError::Plan(format!("cell {}: rounds must be at least 1", c.label)));
            }
        }
        if self.max_turns == 0 {
            return Err(HarnessError::Plan("max_turns must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid plan: {0}")]
    Plan(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("only {available} meetings of size {n} available, {count} needed")]
    NotEnoughMeetings { n: usize, count: usize, available: usize },
    #[error("thread pool: {0}")]
    Pool(String),
    #[error("transcript: {0}")]
    Transcript(String),
}

/// Stable 64-bit seed for `(master, group, index)`.
pub fn scenario_seed(master: u64, group: &str, index: u64) -> u64 {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    h.update((group.len() as u64).to_le_bytes());
    h.update(group.as_bytes());
    h.update(index.to_le_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}

/// Draws `count` distinct meetings of size `n` without replacement. With
/// `top_up` set, missing meetings are generated from the fixture.
pub fn sample_scenarios(
    fixture: &CompanyFixture,
    n: usize,
    count: usize,
    seed: u64,
    top_up: bool,
) -> Result<Vec<Meeting>, HarnessError> {
    let mut pool: Vec<Meeting> = fixture.meetings.iter().filter(|m| m.size() == n).cloned().collect();
    if pool.len() < count && top_up {
        let missing = count - pool.len();
        log::info!("topping up {missing} meeting(s) of size {n}");
        pool.extend(generate_meetings(seed ^ 0x5eed, fixture, n, missing));
    }
    if pool.len() < count {
        return Err(HarnessError::NotEnoughMeetings {
            n,
            count,
            available: pool.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = sample(&mut rng, pool.len(), count).into_vec();
    picked.sort_unstable();
    Ok(picked.into_iter().map(|i| pool[i].clone()).collect())
}

/// Where the run came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Environment {
    pub backend: String,
    pub model: String,
    pub simulate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub cell: GridCell,
    pub sessions: Vec<SessionResult>,
}

impl CellResult {
    pub fn completed(&self) -> impl Iterator<Item = &SessionResult> {
        self.sessions.iter().filter(|s| s.is_completed())
    }

    pub fn failure_rate(&self) -> f64 {
        if self.sessions.is_empty() {
            return 0.0;
        }
        let failed = self.sessions.iter().filter(|s| !s.is_completed()).count();
        failed as f64 / self.sessions.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub plan: ExperimentPlan,
    pub environment: Environment,
    pub cells: Vec<CellResult>,
}

impl ExperimentResult {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("result serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn session_count(&self) -> usize {
        self.cells.iter().map(|c| c.sessions.len()).sum()
    }
}

/// How to execute a plan.
pub struct RunOptions<'a> {
    pub backend: &'a dyn Backend,
    pub environment: Environment,
    /// Scenario-level parallelism; 0 means one thread per processor.
    pub width: usize,
    pub transcripts: Option<&'a TranscriptLog>,
}

/// A scenario ready to run.
#[derive(Debug, Clone)]
pub struct Job {
    pub cell: usize,
    pub scenario_id: String,
    pub seed: u64,
    pub meeting: Meeting,
    pub config: Result<SessionConfig, String>,
}

/// Resolves every cell of the plan into session configs.
pub fn prepare_jobs(plan: &ExperimentPlan, fixture: &CompanyFixture, simulate: bool) -> Result<Vec<Job>, HarnessError> {
    plan.validate()?;
    fixture.validate()?;
    let graph = KnowledgeGraph::from_fixture(fixture)?;
    let mut jobs = Vec::with_capacity(plan.total_sessions());
    for (ci, cell) in plan.cells.iter().enumerate() {
        let sample_seed = scenario_seed(plan.seed, cell.group(), u64::MAX);
        let meetings = sample_scenarios(fixture, cell.n, cell.scenarios, sample_seed, plan.top_up)?;
        for (i, meeting) in meetings.iter().enumerate() {
            let scenario_id = format!("{}-{:02}", cell.label, i);
            let seed = scenario_seed(plan.seed, cell.group(), i as u64);
            let options = SessionOptions {
                k: cell.k,
                rounds: cell.rounds,
                use_knowledge_graph: cell.use_knowledge_graph,
                mode: cell.mode,
                max_turns: plan.max_turns,
                gini: plan.gini,
                simulate,
                params: plan.params.clone(),
            };
            let config = SessionConfig::for_meeting(&scenario_id, fixture, &graph, meeting, seed, options)
                .map_err(|e| e.to_string());
            jobs.push(Job {
                cell: ci,
                scenario_id,
                seed,
                meeting: meeting.clone(),
                config,
            });
        }
    }
    Ok(jobs)
}

fn pool(width: usize) -> Result<rayon::ThreadPool, HarnessError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(width)
        .build()
        .map_err(|e| HarnessError::Pool(e.to_string()))
}

fn execute(config: &SessionConfig, opts: &RunOptions<'_>, prepare: impl Fn(&SessionConfig, &dyn Backend) -> Result<SessionConfig, String>) -> SessionResult {
    let run = |backend: &dyn Backend| -> SessionResult {
        match prepare(config, backend) {
            Ok(prepared) => match run_session(&prepared, backend) {
                Ok(r) => r,
                Err(e) => SessionResult::failed_setup(&prepared, Stage::Setup, e.to_string()),
            },
            Err(e) => SessionResult::failed_setup(config, Stage::Paraphrase, e),
        }
    };
    match opts.transcripts {
        Some(log) => {
            if let Err(e) = log.begin_scenario(&config.scenario_id) {
                return SessionResult::failed_setup(config, Stage::Setup, e.to_string());
            }
            let recording = Recording::new(opts.backend, log);
            let mut result = run(&recording);
            result.transcript = log
                .path_for(&config.scenario_id)
                .and_then(|p| p.file_name().map(|f| f.to_string_lossy().into_owned()));
            result
        }
        None => run(opts.backend),
    }
}

fn run_jobs(
    plan: &ExperimentPlan,
    jobs: &[Job],
    opts: &RunOptions<'_>,
    prepare: &(dyn Fn(&SessionConfig, &dyn Backend) -> Result<SessionConfig, String> + Sync),
) -> Result<Vec<CellResult>, HarnessError> {
    let results: Vec<SessionResult> = pool(opts.width)?.install(|| {
        jobs.par_iter()
            .map(|job| match &job.config {
                Ok(config) => execute(config, opts, prepare),
                Err(message) => setup_failure(plan, job, message),
            })
            .collect()
    });
    let mut cells: Vec<CellResult> = plan
        .cells
        .iter()
        .map(|c| CellResult {
            cell: c.clone(),
            sessions: Vec::new(),
        })
        .collect();
    for (job, result) in jobs.iter().zip(results) {
        cells[job.cell].sessions.push(result);
    }
    Ok(cells)
}

fn setup_failure(plan: &ExperimentPlan, job: &Job, message: &str) -> SessionResult {
    let cell = &plan.cells[job.cell];
    log::warn!("{}: {message}", job.scenario_id);
    SessionResult {
        scenario_id: job.scenario_id.clone(),
        seed: job.seed,
        mode: cell.mode,
        n: cell.n,
        k: cell.k,
        use_knowledge_graph: cell.use_knowledge_graph,
        meeting: job.meeting.clone(),
        rounds: Vec::new(),
        final_candidate: None,
        status: crate::protocol::SessionStatus::Failed {
            round: 0,
            stage: Stage::Setup,
            message: message.to_string(),
        },
        transcript: None,
    }
}

/// Runs every cell of `plan`. Failed scenarios are kept as flagged entries.
pub fn run_experiment(plan: &ExperimentPlan, fixture: &CompanyFixture, opts: &RunOptions<'_>) -> Result<ExperimentResult, HarnessError> {
    let jobs = prepare_jobs(plan, fixture, opts.environment.simulate)?;
    let cells = run_jobs(plan, &jobs, opts, &|c, _| Ok(c.clone()))?;
    Ok(ExperimentResult {
        plan: plan.clone(),
        environment: opts.environment.clone(),
        cells,
    })
}

/// One paraphrase count of the robustness study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessRun {
    pub paraphrases: usize,
    pub cells: Vec<CellResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessResult {
    pub plan: ExperimentPlan,
    pub environment: Environment,
    pub runs: Vec<RobustnessRun>,
}

impl RobustnessResult {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("result serializes");
        s.push('\n');
        s
    }
}

/// Reruns the plan's cells once per paraphrase count, rewording every
/// member's preference text that many times first. Cells must use the
/// non-conversational single-round mode.
pub fn run_robustness(
    plan: &ExperimentPlan,
    counts: &[usize],
    fixture: &CompanyFixture,
    opts: &RunOptions<'_>,
) -> Result<RobustnessResult, HarnessError> {
    if counts.is_empty() {
        return Err(HarnessError::Plan("no paraphrase counts".into()));
    }
    if let Some(c) = plan.cells.iter().find(|c| c.mode != SessionMode::SingleRoundNonConversational) {
        return Err(HarnessError::Plan(format!(
            "cell {}: robustness runs need mode single-round-non-conversational",
            c.label
        )));
    }
    let base = prepare_jobs(plan, fixture, opts.environment.simulate)?;
    let mut runs = Vec::with_capacity(counts.len());
    for &count in counts {
        let jobs: Vec<Job> = base
            .iter()
            .map(|j| {
                let scenario_id = format!("{}-p{count}", j.scenario_id);
                let config = j.config.clone().map(|mut c| {
                    c.scenario_id = scenario_id.clone();
                    c
                });
                Job {
                    cell: j.cell,
                    scenario_id,
                    seed: j.seed,
                    meeting: j.meeting.clone(),
                    config,
                }
            })
            .collect();
        let prepare = move |config: &SessionConfig, backend: &dyn Backend| -> Result<SessionConfig, String> {
            let mut out = config.clone();
            let site = CallSite::new(&config.scenario_id, 0, &config.options.params);
            for member in &mut out.members {
                let id = member.id().clone();
                member.preference_text =
                    paraphrase(&member.preference_text, count, Some(&id), backend, &site).map_err(|e| e.to_string())?;
            }
            Ok(out)
        };
        let cells = run_jobs(plan, &jobs, opts, &prepare)?;
        runs.push(RobustnessRun { paraphrases: count, cells });
    }
    Ok(RobustnessResult {
        plan: plan.clone(),
        environment: opts.environment.clone(),
        runs,
    })
}
