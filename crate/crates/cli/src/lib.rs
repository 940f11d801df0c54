//! Command-line driver: data generation, single sessions, experiment
//! presets, the paraphrase study, reports and fixture validation.
//!
//! Exit codes: 0 success, 1 usage error, 2 runtime failure.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use quorum::backend::{Backend, LiveBackend, LiveConfig, Recording, ReplayBackend, TranscriptLog};
use quorum::harness::{
    run_experiment, run_robustness, sample_scenarios, scenario_seed, CompanySource, Environment, ExperimentPlan, ExperimentResult,
    RobustnessResult, RunOptions, DEFAULT_COMPANY_SIZE, PRESETS,
};
use quorum::metrics::GiniMode;
use quorum::model::{generate_with, CompanyFixture, GeneratorConfig, KnowledgeGraph};
use quorum::protocol::{run_session, SessionConfig, SessionMode, SessionOptions, SessionResult};
use quorum::reporting::{emit, Report, ReportData};
use quorum::sim::SimulatedBackend;

pub const DEFAULT_SEED: u64 = 7;
pub const MANIFEST: &str = "manifest.json";
pub const EXPERIMENT_RESULT: &str = "experiment-result.json";
pub const ROBUSTNESS_RESULT: &str = "robustness-result.json";
pub const SESSION_RESULT: &str = "session-result.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BackendKind {
    /// Deterministic simulated members and coordinator
    Mock,
    /// OpenAI-compatible chat completions endpoint
    Live,
    /// Answers recorded in a transcript directory
    Replay,
}

impl BackendKind {
    fn as_str(self) -> &'static str {
        match self {
            BackendKind::Mock => "mock",
            BackendKind::Live => "live",
            BackendKind::Replay => "replay",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Full,
    SingleRoundConversational,
    SingleRoundNonConversational,
}

impl From<ModeArg> for SessionMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Full => SessionMode::Full,
            ModeArg::SingleRoundConversational => SessionMode::SingleRoundConversational,
            ModeArg::SingleRoundNonConversational => SessionMode::SingleRoundNonConversational,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GiniArg {
    Standard,
    NSquared,
}

impl From<GiniArg> for GiniMode {
    fn from(g: GiniArg) -> Self {
        match g {
            GiniArg::Standard => GiniMode::Standard,
            GiniArg::NSquared => GiniMode::NSquared,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "quorum",
    version,
    about = "Multi-round meeting coordination with language-model agents",
    after_help = "Exit codes: 0 success, 1 usage error, 2 runtime failure."
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Config file (TOML or JSON); flags take precedence over it
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Master seed
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Language model backend [default: mock]
    #[arg(long, global = true, value_enum)]
    pub backend: Option<BackendKind>,
    /// Transcript directory: written in mock and live mode, read in replay mode
    #[arg(long, global = true, value_name = "DIR")]
    pub transcripts: Option<PathBuf>,
    /// Scenarios run in parallel [default: processors, or 2 in live mode]
    #[arg(long, global = true)]
    pub width: Option<usize>,
    /// Output location (a file for gen-data, a directory otherwise)
    #[arg(short, long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Model name for live mode
    #[arg(long, global = true)]
    pub model: Option<String>,
    /// Base URL of the live endpoint
    #[arg(long, global = true, value_name = "URL")]
    pub base_url: Option<String>,
    /// More log output (-v info, -vv debug)
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic company fixture
    GenData {
        /// Number of employees
        #[arg(long, default_value_t = DEFAULT_COMPANY_SIZE)]
        size: usize,
        /// Meetings generated per meeting size
        #[arg(long)]
        meetings_per_size: Option<usize>,
    },
    /// Run one coordination session
    Run {
        /// Company fixture; generated from the seed when omitted
        #[arg(long, value_name = "FILE")]
        company: Option<PathBuf>,
        /// Index of the meeting in the fixture; sampled by size when omitted
        #[arg(long)]
        meeting: Option<usize>,
        /// Meeting size used when sampling
        #[arg(short, long, default_value_t = 3)]
        n: usize,
        /// Options per round
        #[arg(short, long, default_value_t = 2)]
        k: usize,
        /// Number of rounds
        #[arg(long, default_value_t = 4)]
        rounds: u32,
        /// Session mode
        #[arg(long, value_enum, default_value_t = ModeArg::Full)]
        mode: ModeArg,
        /// Give the coordinator the knowledge graph
        #[arg(long)]
        knowledge_graph: bool,
        /// Member turns per conversation
        #[arg(long, default_value_t = quorum::dialogue::DEFAULT_MAX_TURNS)]
        max_turns: usize,
        /// Equity score normalization
        #[arg(long, value_enum, default_value_t = GiniArg::Standard)]
        gini: GiniArg,
    },
    /// Run an experiment preset or plan file
    Experiment {
        /// Preset name (grid, baselines, robustness) or plan file
        plan: String,
        /// Override scenarios per cell
        #[arg(long)]
        scenarios: Option<usize>,
        /// Company fixture to sample meetings from
        #[arg(long, value_name = "FILE")]
        company: Option<PathBuf>,
    },
    /// Compare metrics after repeated paraphrasing of preferences
    Robustness {
        /// Preset name or plan file
        #[arg(default_value = "robustness")]
        plan: String,
        /// Paraphrase counts, comma separated [default: from plan, else 0,1,2]
        #[arg(long, value_delimiter = ',')]
        counts: Option<Vec<usize>>,
        /// Override scenarios per cell
        #[arg(long)]
        scenarios: Option<usize>,
        /// Company fixture to sample meetings from
        #[arg(long, value_name = "FILE")]
        company: Option<PathBuf>,
    },
    /// Build tables and plot data from result files
    Report {
        /// experiment-result.json or robustness-result.json files
        inputs: Vec<PathBuf>,
        /// Rebuild from the per-scenario CSV tables of an earlier report
        #[arg(long, value_name = "DIR", conflicts_with = "inputs")]
        from_tables: Option<PathBuf>,
        /// Confidence level of the intervals
        #[arg(long, default_value_t = quorum::reporting::DEFAULT_LEVEL)]
        level: f64,
    },
    /// Check a company fixture or plan file
    Validate {
        /// File to check
        file: PathBuf,
    },
}

/// Settings that may come from the config file.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub backend: Option<BackendKind>,
    pub transcripts: Option<PathBuf>,
    pub width: Option<usize>,
    pub out: Option<PathBuf>,
    /// Record latency and wall-clock timestamps in transcripts.
    pub timing: Option<bool>,
    pub live: Option<LiveConfig>,
}

impl FileConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let is_toml = path.extension().is_some_and(|e| e == "toml");
        if is_toml {
            toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
        } else {
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
        }
    }
}

/// Flags merged over the config file over defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub seed: u64,
    /// The seed came from a flag or the config file.
    pub seed_given: bool,
    pub backend: BackendKind,
    pub transcripts: Option<PathBuf>,
    pub width: usize,
    pub out: Option<PathBuf>,
    pub timing: bool,
    pub live: LiveConfig,
}

impl Settings {
    pub fn resolve(flags: &GlobalArgs, file: FileConfig) -> Self {
        let backend = flags.backend.or(file.backend).unwrap_or(BackendKind::Mock);
        let mut live = file.live.unwrap_or_default();
        if let Some(m) = &flags.model {
            live.model = m.clone();
        }
        if let Some(u) = &flags.base_url {
            live.base_url = u.clone();
        }
        let width = flags.width.or(file.width).unwrap_or_else(|| {
            if backend == BackendKind::Live {
                2
            } else {
                std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
            }
        });
        let seed = flags.seed.or(file.seed);
        Settings {
            seed: seed.unwrap_or(DEFAULT_SEED),
            seed_given: seed.is_some(),
            backend,
            transcripts: flags.transcripts.clone().or(file.transcripts),
            width: width.max(1),
            out: flags.out.clone().or(file.out),
            timing: file.timing.unwrap_or(backend == BackendKind::Live),
            live,
        }
    }
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    init_logging(cli.global.verbose);
    match dispatch(&cli) {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}\n\n{}", Cli::command().render_usage());
            1
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            2
        }
    }
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .try_init();
}

fn dispatch(cli: &Cli) -> Result<(), Failure> {
    let file = match &cli.global.config {
        Some(p) => FileConfig::load(p).map_err(|e| usage(format!("{e:#}")))?,
        None => FileConfig::default(),
    };
    let settings = Settings::resolve(&cli.global, file);
    match &cli.command {
        Command::GenData { size, meetings_per_size } => gen_data(&settings, *size, *meetings_per_size),
        Command::Run {
            company,
            meeting,
            n,
            k,
            rounds,
            mode,
            knowledge_graph,
            max_turns,
            gini,
        } => {
            let options = SessionOptions {
                k: *k,
                rounds: *rounds,
                use_knowledge_graph: *knowledge_graph,
                mode: (*mode).into(),
                max_turns: *max_turns,
                gini: (*gini).into(),
                simulate: true,
                params: Default::default(),
            };
            run_one(&settings, company.as_deref(), *meeting, *n, options)
        }
        Command::Experiment {
            plan,
            scenarios,
            company,
        } => experiment(&settings, plan, *scenarios, company.as_deref()),
        Command::Robustness {
            plan,
            counts,
            scenarios,
            company,
        } => robustness(&settings, plan, counts.as_deref(), *scenarios, company.as_deref()),
        Command::Report {
            inputs,
            from_tables,
            level,
        } => report(&settings, inputs, from_tables.as_deref(), *level),
        Command::Validate { file } => validate(file),
    }
}

fn announce(settings: &Settings) {
    println!("seed: {}", settings.seed);
    println!("backend: {}", settings.backend.as_str());
}

fn out_dir(settings: &Settings, default: &str) -> anyhow::Result<PathBuf> {
    let dir = settings.out.clone().unwrap_or_else(|| PathBuf::from(default));
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

fn write_file(path: &Path, text: &str) -> anyhow::Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn gen_data(settings: &Settings, size: usize, meetings_per_size: Option<usize>) -> Result<(), Failure> {
    announce(settings);
    let mut config = GeneratorConfig {
        size,
        ..GeneratorConfig::default()
    };
    if let Some(m) = meetings_per_size {
        config.meetings_per_size = m;
    }
    let fixture = generate_with(settings.seed, &config).map_err(|e| usage(e.to_string()))?;
    let path = settings.out.clone().unwrap_or_else(|| PathBuf::from("company.json"));
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    fixture.save(&path).map_err(|e| anyhow!(e))?;
    println!(
        "wrote {} ({} employees, {} meetings)",
        path.display(),
        fixture.employees.len(),
        fixture.meetings.len()
    );
    Ok(())
}

/// The backend for `settings` plus the stamp recorded with results.
fn make_backend(settings: &Settings) -> Result<(Box<dyn Backend>, Environment), Failure> {
    match settings.backend {
        BackendKind::Mock => Ok((
            Box::new(SimulatedBackend::new()),
            Environment {
                backend: "mock".into(),
                model: "simulated".into(),
                simulate: true,
            },
        )),
        BackendKind::Live => {
            let live = &settings.live;
            let has_key = std::env::var(&live.api_key_env).is_ok_and(|k| !k.is_empty());
            if !has_key && live.base_url == LiveConfig::default().base_url {
                return Err(usage(format!(
                    "live mode needs ${} or a --base-url for a local endpoint",
                    live.api_key_env
                )));
            }
            let backend = LiveBackend::new(live.clone()).map_err(|e| usage(e.to_string()))?;
            Ok((
                Box::new(backend),
                Environment {
                    backend: "live".into(),
                    model: live.model.clone(),
                    simulate: false,
                },
            ))
        }
        BackendKind::Replay => {
            let dir = settings
                .transcripts
                .as_ref()
                .ok_or_else(|| usage("replay mode needs --transcripts DIR"))?;
            let backend = ReplayBackend::load_dir(dir).map_err(|e| anyhow!(e))?;
            let recorded = read_manifest(dir)?;
            Ok((
                Box::new(backend),
                Environment {
                    backend: "replay".into(),
                    model: recorded.model,
                    simulate: recorded.simulate,
                },
            ))
        }
    }
}

fn read_manifest(dir: &Path) -> anyhow::Result<Environment> {
    let path = dir.join(MANIFEST);
    match fs::read_to_string(&path) {
        Ok(text) => serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display())),
        Err(_) => {
            log::warn!("{} missing, assuming a live recording", path.display());
            Ok(Environment {
                backend: "live".into(),
                model: String::new(),
                simulate: false,
            })
        }
    }
}

/// Transcript log for recording runs; replay runs read instead.
fn transcript_log(settings: &Settings, env: &Environment) -> anyhow::Result<Option<TranscriptLog>> {
    match (&settings.transcripts, settings.backend) {
        (Some(dir), BackendKind::Mock | BackendKind::Live) => {
            let log = TranscriptLog::to_dir(dir, settings.timing).map_err(|e| anyhow!(e))?;
            let mut manifest = serde_json::to_string_pretty(env)?;
            manifest.push('\n');
            write_file(&dir.join(MANIFEST), &manifest)?;
            Ok(Some(log))
        }
        _ => Ok(None),
    }
}

fn load_company(source: Option<&Path>, seed: u64) -> Result<CompanyFixture, Failure> {
    match source {
        Some(p) => CompanyFixture::load(p).map_err(|e| usage(format!("{}: {e}", p.display()))),
        None => CompanySource::Generate {
            seed,
            size: DEFAULT_COMPANY_SIZE,
        }
        .load()
        .map_err(|e| Failure::Runtime(anyhow!(e))),
    }
}

fn run_one(
    settings: &Settings,
    company: Option<&Path>,
    meeting: Option<usize>,
    n: usize,
    mut options: SessionOptions,
) -> Result<(), Failure> {
    announce(settings);
    println!("mode: {}", options.mode);
    let (backend, env) = make_backend(settings)?;
    options.simulate = env.simulate;
    if settings.backend == BackendKind::Live {
        options.params = settings.live.params();
    }
    let fixture = load_company(company, settings.seed)?;
    let graph = KnowledgeGraph::from_fixture(&fixture).map_err(|e| anyhow!(e))?;
    let meeting = match meeting {
        Some(i) => fixture
            .meetings
            .get(i)
            .cloned()
            .ok_or_else(|| usage(format!("meeting {i} out of range ({} meetings)", fixture.meetings.len())))?,
        None => sample_scenarios(&fixture, n, 1, scenario_seed(settings.seed, "run", 0), true)
            .map_err(|e| anyhow!(e))?
            .remove(0),
    };
    let config = SessionConfig::for_meeting("run", &fixture, &graph, &meeting, settings.seed, options)
        .map_err(|e| usage(e.to_string()))?;
    let log = transcript_log(settings, &env)?;
    let result = match &log {
        Some(log) => {
            log.begin_scenario("run").map_err(|e| anyhow!(e))?;
            let mut r = run_session(&config, &Recording::new(&*backend, log)).map_err(|e| anyhow!(e))?;
            r.transcript = Some("run.jsonl".into());
            r
        }
        None => run_session(&config, &*backend).map_err(|e| anyhow!(e))?,
    };
    print_session(&result);
    let dir = out_dir(settings, "results")?;
    let path = dir.join(SESSION_RESULT);
    let mut text = serde_json::to_string_pretty(&result).map_err(|e| anyhow!(e))?;
    text.push('\n');
    write_file(&path, &text)?;
    println!("wrote {}", path.display());
    if !result.is_completed() {
        return Err(Failure::Runtime(anyhow!("session failed: {:?}", result.status)));
    }
    Ok(())
}

fn print_session(result: &SessionResult) {
    println!(
        "meeting: {} ({} members, {} min on {})",
        result.meeting.subject,
        result.n,
        result.meeting.duration_minutes,
        result.meeting.date
    );
    println!("round  ratio  score  equity  interactions  candidate");
    for r in &result.rounds {
        let m = &r.metrics;
        let interactions = m.avg_interactions.map(|v| format!("{v:.2}")).unwrap_or_else(|| "n/a".into());
        let candidate = &r.options.options[m.candidate_index].suggestion;
        println!(
            "{:>5}  {:>5.2}  {:>5.2}  {:>6.2}  {:>12}  {}",
            m.round, m.candidate.ratio, m.candidate.score, m.candidate.equity, interactions, candidate
        );
    }
}

fn resolve_plan(
    settings: &Settings,
    name: &str,
    scenarios: Option<usize>,
    company: Option<&Path>,
) -> Result<ExperimentPlan, Failure> {
    let mut plan = match ExperimentPlan::preset(name, settings.seed) {
        Some(p) => p,
        None => {
            let path = Path::new(name);
            if !path.exists() {
                return Err(usage(format!(
                    "{name:?} is neither a preset ({}) nor a plan file",
                    PRESETS.join(", ")
                )));
            }
            let text = fs::read_to_string(path).with_context(|| format!("reading {name}"))?;
            let mut plan = ExperimentPlan::from_json(&text).map_err(|e| usage(format!("{name}: {e}")))?;
            if let Some(seed) = explicit_seed(settings) {
                plan.seed = seed;
            }
            plan
        }
    };
    if let Some(s) = scenarios {
        for c in &mut plan.cells {
            c.scenarios = s;
        }
    }
    if let Some(p) = company {
        plan.company = CompanySource::File { path: p.to_path_buf() };
    }
    if settings.backend == BackendKind::Live {
        plan.params = settings.live.params();
    }
    plan.validate().map_err(|e| usage(e.to_string()))?;
    Ok(plan)
}

// Plan files carry their own seed; only an explicit flag or config value
// overrides it.
fn explicit_seed(settings: &Settings) -> Option<u64> {
    settings.seed_given.then_some(settings.seed)
}

fn fixture_for(plan: &ExperimentPlan) -> Result<CompanyFixture, Failure> {
    plan.company.load().map_err(|e| usage(e.to_string()))
}

fn experiment(settings: &Settings, name: &str, scenarios: Option<usize>, company: Option<&Path>) -> Result<(), Failure> {
    announce(settings);
    let plan = resolve_plan(settings, name, scenarios, company)?;
    println!("plan: {} ({} cells, {} sessions)", plan.name, plan.cells.len(), plan.total_sessions());
    let (backend, env) = make_backend(settings)?;
    let fixture = fixture_for(&plan)?;
    let log = transcript_log(settings, &env)?;
    let opts = RunOptions {
        backend: &*backend,
        environment: env,
        width: settings.width,
        transcripts: log.as_ref(),
    };
    let result = run_experiment(&plan, &fixture, &opts).map_err(|e| anyhow!(e))?;
    let dir = out_dir(settings, "results")?;
    let path = dir.join(EXPERIMENT_RESULT);
    write_file(&path, &result.to_json())?;
    let mut failed = 0;
    for cell in &result.cells {
        let done: Vec<f64> = cell
            .completed()
            .filter_map(|s| s.final_metrics().map(|m| m.candidate.ratio))
            .collect();
        failed += cell.sessions.len() - done.len();
        let mean = if done.is_empty() {
            "-".to_string()
        } else {
            format!("{:.2}", 100.0 * done.iter().sum::<f64>() / done.len() as f64)
        };
        println!(
            "  {:<40} {}/{} completed, final satisfaction ratio {mean}%",
            cell.cell.label,
            done.len(),
            cell.sessions.len()
        );
    }
    println!("wrote {}", path.display());
    if failed == result.session_count() {
        return Err(Failure::Runtime(anyhow!("every scenario failed")));
    }
    if failed > 0 {
        eprintln!("warning: {failed} scenario(s) failed; see {}", path.display());
    }
    Ok(())
}

fn robustness(
    settings: &Settings,
    name: &str,
    counts: Option<&[usize]>,
    scenarios: Option<usize>,
    company: Option<&Path>,
) -> Result<(), Failure> {
    announce(settings);
    let plan = resolve_plan(settings, name, scenarios, company)?;
    let counts: Vec<usize> = match counts {
        Some(c) => c.to_vec(),
        None if !plan.paraphrase_counts.is_empty() => plan.paraphrase_counts.clone(),
        None => vec![0, 1, 2],
    };
    println!("paraphrase counts: {counts:?}");
    let (backend, env) = make_backend(settings)?;
    let fixture = fixture_for(&plan)?;
    let log = transcript_log(settings, &env)?;
    let opts = RunOptions {
        backend: &*backend,
        environment: env,
        width: settings.width,
        transcripts: log.as_ref(),
    };
    let result = run_robustness(&plan, &counts, &fixture, &opts).map_err(|e| match e {
        quorum::harness::HarnessError::Plan(m) => usage(m),
        other => Failure::Runtime(anyhow!(other)),
    })?;
    let dir = out_dir(settings, "results")?;
    let path = dir.join(ROBUSTNESS_RESULT);
    write_file(&path, &result.to_json())?;
    println!("wrote {}", path.display());
    Ok(())
}

fn load_results(inputs: &[PathBuf]) -> anyhow::Result<ReportData> {
    let mut data = ReportData::default();
    for path in inputs {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let value: serde_json::Value =
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        if value.get("runs").is_some() {
            let r = serde_json::from_value(value).with_context(|| format!("reading {}", path.display()))?;
            data.add_robustness(&r);
        } else {
            let r = serde_json::from_value(value).with_context(|| format!("reading {}", path.display()))?;
            data.add_experiment(&r);
        }
    }
    Ok(data)
}

fn report(settings: &Settings, inputs: &[PathBuf], from_tables: Option<&Path>, level: f64) -> Result<(), Failure> {
    if !(level > 0.0 && level < 1.0) {
        return Err(usage(format!("--level must be in (0, 1), got {level}")));
    }
    let data = match from_tables {
        Some(dir) => ReportData::read_csv(dir).map_err(|e| anyhow!(e))?,
        None if inputs.is_empty() => return Err(usage("report needs result files or --from-tables")),
        None => load_results(inputs)?,
    };
    let report = Report::build(&data, level).map_err(|e| anyhow!(e))?;
    let dir = out_dir(settings, "report")?;
    let files = emit(&report, &data, &dir).map_err(|e| anyhow!(e))?;
    print_summary(&report);
    for f in files {
        println!("wrote {}", f.display());
    }
    Ok(())
}

fn print_summary(report: &Report) {
    let table = &report.summary;
    let mut last = "";
    for row in &table.rows {
        if row.setting != last {
            println!("\n{}", row.setting);
            let heads: Vec<&str> = table.variants.iter().map(|v| v.label()).collect();
            println!("  {:<34} {}", "", heads.join(" | "));
            last = &row.setting;
        }
        let cells: Vec<String> = row.cells.iter().map(|c| c.to_string()).collect();
        println!("  {:<34} {}", row.metric.title(), cells.join(" | "));
    }
    if let Some(rob) = &report.robustness {
        println!("\nparaphrases ({}): {:?}", rob.setting, rob.counts);
        for row in &rob.rows {
            let cells: Vec<String> = row.cells.iter().map(|c| c.to_string()).collect();
            let std = row.std_of_mean.map(|s| format!("{s:.3}")).unwrap_or_default();
            println!("  {:<34} {} | std {std}", row.metric.title(), cells.join(" | "));
        }
    }
}

fn validate(file: &Path) -> Result<(), Failure> {
    let text = fs::read_to_string(file).with_context(|| format!("reading {}", file.display()))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| Failure::Runtime(anyhow!("{}: malformed JSON: {e}", file.display())))?;
    if value.get("employees").is_some() {
        let fixture = CompanyFixture::from_json(&text).map_err(|e| anyhow!("{}: {e}", file.display()))?;
        let graph = KnowledgeGraph::from_fixture(&fixture).map_err(|e| anyhow!(e))?;
        println!(
            "ok: {} employees, {} meetings, {} graph edges",
            fixture.employees.len(),
            fixture.meetings.len(),
            graph.edges.len()
        );
    } else if value.get("plan").is_some() && value.get("runs").is_some() {
        let result: RobustnessResult =
            serde_json::from_value(value).map_err(|e| anyhow!("{}: invalid robustness result: {e}", file.display()))?;
        let sessions: usize = result.runs.iter().flat_map(|r| &r.cells).map(|c| c.sessions.len()).sum();
        println!("ok: robustness result with {} paraphrase counts, {sessions} sessions", result.runs.len());
    } else if value.get("plan").is_some() && value.get("cells").is_some() {
        let result = ExperimentResult::from_json(&text).map_err(|e| anyhow!("{}: {e}", file.display()))?;
        let completed: usize = result.cells.iter().map(|c| c.completed().count()).sum();
        println!(
            "ok: experiment result with {} cells, {completed}/{} sessions completed",
            result.cells.len(),
            result.session_count()
        );
    } else if value.get("cells").is_some() {
        let plan = ExperimentPlan::from_json(&text).map_err(|e| anyhow!("{}: {e}", file.display()))?;
        println!("ok: plan {} with {} cells, {} sessions", plan.name, plan.cells.len(), plan.total_sessions());
    } else {
        return Err(Failure::Runtime(anyhow!("{}: neither a company fixture nor a plan", file.display())));
    }
    Ok(())
}
