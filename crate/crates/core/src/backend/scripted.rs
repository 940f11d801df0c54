use std::collections::{BTreeMap, VecDeque};
use std::fmt;
use std::sync::Mutex;

use super::{Backend, BackendError, Completion, CompletionRequest};
use crate::model::MemberId;

/// Lookup key for scripted responses.
///
/// `scenario` and `member` are optional scopes: a call first looks for the
/// most specific key and falls back to broader ones.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ScriptKey {
    pub scenario: Option<String>,
    pub tag: String,
    pub round: u32,
    pub member: Option<MemberId>,
}

impl ScriptKey {
    pub fn new(tag: &str, round: u32) -> Self {
        Self {
            scenario: None,
            tag: tag.to_string(),
            round,
            member: None,
        }
    }

    pub fn member(mut self, member: impl Into<MemberId>) -> Self {
        self.member = Some(member.into());
        self
    }

    pub fn scenario(mut self, scenario: impl Into<String>) -> Self {
        self.scenario = Some(scenario.into());
        self
    }
}

impl fmt::Display for ScriptKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(tag={}, round={}", self.tag, self.round)?;
        if let Some(m) = &self.member {
            write!(f, ", member={m}")?;
        }
        if let Some(s) = &self.scenario {
            write!(f, ", scenario={s}")?;
        }
        write!(f, ")")
    }
}

/// Returns canned responses in registration order.
#[derive(Default)]
pub struct ScriptedBackend {
    scripts: Mutex<BTreeMap<ScriptKey, VecDeque<String>>>,
    fallback: Option<Box<dyn Backend>>,
}

impl ScriptedBackend {
    pub fn new() -> Self {
        Self::default()
    }

    /// Unscripted calls go to `fallback` instead of failing.
    pub fn with_fallback(fallback: impl Backend + 'static) -> Self {
        Self {
            scripts: Mutex::default(),
            fallback: Some(Box::new(fallback)),
        }
    }

    pub fn script<I, S>(&self, key: ScriptKey, responses: I) -> Result<(), BackendError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut scripts = self.scripts.lock().expect("script table poisoned");
        if scripts.contains_key(&key) {
            return Err(BackendError::DuplicateScript(key.to_string()));
        }
        scripts.insert(key, responses.into_iter().map(Into::into).collect());
        Ok(())
    }

    /// Responses not consumed yet, per key.
    pub fn remaining(&self) -> BTreeMap<ScriptKey, usize> {
        let scripts = self.scripts.lock().expect("script table poisoned");
        scripts.iter().map(|(k, q)| (k.clone(), q.len())).collect()
    }
}

impl Backend for ScriptedBackend {
    fn complete(&self, request: &CompletionRequest) -> Result<Completion, BackendError> {
        let scenario = Some(request.key.scenario.clone());
        let member = request.key.member.clone();
        let lookups = [
            (scenario.clone(), member.clone()),
            (None, member.clone()),
            (scenario, None),
            (None, None),
        ];
        {
            let mut scripts = self.scripts.lock().expect("script table poisoned");
            for (scenario, member) in lookups {
                let key = ScriptKey {
                    scenario,
                    tag: request.tag.clone(),
                    round: request.key.round,
                    member,
                };
                if let Some(queue) = scripts.get_mut(&key) {
                    return match queue.pop_front() {
                        Some(text) => Ok(Completion::new(text)),
                        None => Err(BackendError::ScriptExhausted(key.to_string())),
                    };
                }
            }
        }
        match &self.fallback {
            Some(inner) => inner.complete(request),
            None => Err(BackendError::Unscripted(request.describe())),
        }
    }
}
