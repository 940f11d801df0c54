use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{Backend, BackendError, Completion, CompletionRequest};
use crate::model::MemberId;

/// One completed backend call, one JSON line in `transcripts/<scenario>.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptRecord {
    pub scenario: String,
    pub round: u32,
    pub tag: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub member: Option<MemberId>,
    pub request: CompletionRequest,
    pub response: String,
    /// Absent for deterministic runs so files stay byte-identical.
    #[serde(default)]
    pub latency_ms: Option<u64>,
    pub retries: u32,
    #[serde(default)]
    pub timestamp: Option<String>,
}

/// Append-only sink for transcript records.
///
/// Writes are serialized through one lock so concurrent scenarios never
/// interleave partial lines.
pub struct TranscriptLog {
    dir: Option<PathBuf>,
    keep_in_memory: bool,
    timing: bool,
    records: Mutex<Vec<TranscriptRecord>>,
    count: AtomicUsize,
}

impl TranscriptLog {
    /// Keeps records in memory only.
    pub fn in_memory() -> Self {
        Self {
            dir: None,
            keep_in_memory: true,
            timing: false,
            records: Mutex::default(),
            count: AtomicUsize::new(0),
        }
    }

    /// Streams records to `<dir>/<scenario>.jsonl`. With `timing` off,
    /// latency and timestamps are left empty.
    pub fn to_dir(dir: impl Into<PathBuf>, timing: bool) -> Result<Self, BackendError> {
        let dir = dir.into();
        fs::create_dir_all(&dir)
            .map_err(|e| BackendError::Transcript(format!("cannot create {}: {e}", dir.display())))?;
        Ok(Self {
            dir: Some(dir),
            keep_in_memory: false,
            timing,
            records: Mutex::default(),
            count: AtomicUsize::new(0),
        })
    }

    pub fn timing(&self) -> bool {
        self.timing
    }

    pub fn path_for(&self, scenario: &str) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(format!("{}.jsonl", file_stem(scenario))))
    }

    /// Truncates the scenario's file so a rerun does not append to stale data.
    pub fn begin_scenario(&self, scenario: &str) -> Result<(), BackendError> {
        let _guard = self.records.lock().expect("transcript lock poisoned");
        if let Some(path) = self.path_for(scenario) {
            File::create(&path)
                .map_err(|e| BackendError::Transcript(format!("cannot create {}: {e}", path.display())))?;
        }
        Ok(())
    }

    pub fn append(&self, record: TranscriptRecord) -> Result<(), BackendError> {
        let mut records = self.records.lock().expect("transcript lock poisoned");
        if let Some(path) = self.path_for(&record.scenario) {
            let mut line = serde_json::to_string(&record)
                .map_err(|e| BackendError::Transcript(e.to_string()))?;
            line.push('\n');
            let mut file = OpenOptions::new()
                .create(true)
                .append(true)
                .open(&path)
                .map_err(|e| BackendError::Transcript(format!("cannot open {}: {e}", path.display())))?;
            file.write_all(line.as_bytes())
                .map_err(|e| BackendError::Transcript(format!("cannot write {}: {e}", path.display())))?;
        }
        self.count.fetch_add(1, Ordering::SeqCst);
        if self.keep_in_memory {
            records.push(record);
        }
        Ok(())
    }

    /// Number of records appended so far.
    pub fn len(&self) -> usize {
        self.count.load(Ordering::SeqCst)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// In-memory copy; empty for directory-backed logs.
    pub fn records(&self) -> Vec<TranscriptRecord> {
        self.records.lock().expect("transcript lock poisoned").clone()
    }
}

fn file_stem(scenario: &str) -> String {
    let stem: String = scenario
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.' { c } else { '_' })
        .collect();
    if stem.is_empty() {
        "scenario".into()
    } else {
        stem
    }
}

pub fn read_transcript(path: impl AsRef<Path>) -> Result<Vec<TranscriptRecord>, BackendError> {
    let path = path.as_ref();
    let file =
        File::open(path).map_err(|e| BackendError::Transcript(format!("cannot open {}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| BackendError::Transcript(format!("{}: {e}", path.display())))?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line)
            .map_err(|e| BackendError::Transcript(format!("{}:{}: {e}", path.display(), i + 1)))?;
        out.push(record);
    }
    Ok(out)
}

/// Wraps a backend and logs every successful call.
pub struct Recording<'a, B> {
    inner: B,
    log: &'a TranscriptLog,
}

impl<'a, B: Backend> Recording<'a, B> {
    pub fn new(inner: B, log: &'a TranscriptLog) -> Self {
        Self { inner, log }
    }
}

impl<B: Backend> Backend for Recording<'_, B> {
    fn complete(&self, request: &CompletionRequest) -> Result<Completion, BackendError> {
        let started = Instant::now();
        let completion = self.inner.complete(request)?;
        let (latency_ms, timestamp) = if self.log.timing {
            (
                Some(started.elapsed().as_millis() as u64),
                Some(chrono::Utc::now().to_rfc3339()),
            )
        } else {
            (None, None)
        };
        let mut logged = request.clone();
        logged.context = None;
        self.log.append(TranscriptRecord {
            scenario: request.key.scenario.clone(),
            round: request.key.round,
            tag: request.tag.clone(),
            member: request.key.member.clone(),
            request: logged,
            response: completion.text.clone(),
            latency_ms,
            retries: completion.retries,
            timestamp,
        })?;
        Ok(completion)
    }
}
