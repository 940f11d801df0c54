use std::collections::{BTreeMap, VecDeque};
use std::path::Path;
use std::sync::Mutex;

use super::transcript::{read_transcript, TranscriptRecord};
use super::{Backend, BackendError, Completion, CompletionRequest};
use crate::model::MemberId;

type ReplayKey = (String, String, u32, Option<MemberId>);

/// Answers calls from saved transcripts, in the order they were recorded
/// for each (scenario, tag, round, member).
pub struct ReplayBackend {
    queues: Mutex<BTreeMap<ReplayKey, VecDeque<String>>>,
}

impl ReplayBackend {
    pub fn from_records(records: impl IntoIterator<Item = TranscriptRecord>) -> Self {
        let mut queues: BTreeMap<ReplayKey, VecDeque<String>> = BTreeMap::new();
        for r in records {
            queues
                .entry((r.scenario, r.tag, r.round, r.member))
                .or_default()
                .push_back(r.response);
        }
        Self {
            queues: Mutex::new(queues),
        }
    }

    /// Loads every `*.jsonl` file in `dir`.
    pub fn load_dir(dir: impl AsRef<Path>) -> Result<Self, BackendError> {
        let dir = dir.as_ref();
        let entries = std::fs::read_dir(dir)
            .map_err(|e| BackendError::Transcript(format!("cannot read {}: {e}", dir.display())))?;
        let mut paths: Vec<_> = entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
            .collect();
        paths.sort();
        if paths.is_empty() {
            return Err(BackendError::Transcript(format!(
                "no transcript files in {}",
                dir.display()
            )));
        }
        let mut records = Vec::new();
        for p in paths {
            records.extend(read_transcript(&p)?);
        }
        Ok(Self::from_records(records))
    }

    /// Responses never requested.
    pub fn unused(&self) -> usize {
        self.queues
            .lock()
            .expect("replay lock poisoned")
            .values()
            .map(VecDeque::len)
            .sum()
    }
}

impl Backend for ReplayBackend {
    fn complete(&self, request: &CompletionRequest) -> Result<Completion, BackendError> {
        let key = (
            request.key.scenario.clone(),
            request.tag.clone(),
            request.key.round,
            request.key.member.clone(),
        );
        let mut queues = self.queues.lock().expect("replay lock poisoned");
        queues
            .get_mut(&key)
            .and_then(VecDeque::pop_front)
            .map(Completion::new)
            .ok_or_else(|| BackendError::NotRecorded(request.describe()))
    }
}
