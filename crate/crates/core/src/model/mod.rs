//! The synthetic company: employees, meetings, and the knowledge graph the
//! coordinator may consult.

mod generate;
mod graph;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::schedule::{Pronoun, PreferenceRule};

pub use generate::{generate_company, generate_meetings, generate_with, GeneratorConfig};
pub use graph::{build_collaborators, build_teammates, Edge, KnowledgeGraph, NodeInfo, Relation};

/// Employee identifier, e.g. `Member 12`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MemberId(pub String);

impl MemberId {
    pub fn new(id: impl Into<String>) -> Self {
        MemberId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for MemberId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for MemberId {
    fn from(s: &str) -> Self {
        MemberId(s.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmployeeProfile {
    pub name: MemberId,
    pub role: String,
    #[serde(default)]
    pub manager: Option<MemberId>,
    pub level: u8,
    pub responsibilities: Vec<String>,
    /// Private free text. Never copied into the knowledge graph.
    pub schedule_preferences: String,
    /// Structured form of `schedule_preferences`, used only by the simulation.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub preference_rules: Vec<PreferenceRule>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pronoun: Option<Pronoun>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Meeting {
    pub organizer: MemberId,
    pub members: Vec<MemberId>,
    pub subject: String,
    pub date: NaiveDate,
    pub duration_minutes: u16,
}

impl Meeting {
    pub fn size(&self) -> usize {
        self.members.len()
    }
}

fn default_company_name() -> String {
    "MedAI Labs".to_string()
}

/// One company document: the `company.json` fixture.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompanyFixture {
    #[serde(default = "default_company_name")]
    pub company: String,
    pub seed: u64,
    pub employees: Vec<EmployeeProfile>,
    pub meetings: Vec<Meeting>,
}

/// One problem found while validating a fixture.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationIssue {
    pub location: String,
    pub message: String,
}

impl fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.location, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ValidationErrors(pub Vec<ValidationIssue>);

impl ValidationErrors {
    fn push(&mut self, location: impl Into<String>, message: impl Into<String>) {
        self.0.push(ValidationIssue {
            location: location.into(),
            message: message.into(),
        });
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    fn into_result(self) -> Result<(), ModelError> {
        if self.0.is_empty() {
            Ok(())
        } else {
            Err(ModelError::Invalid(self))
        }
    }
}

impl fmt::Display for ValidationErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, issue) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "  - {issue}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("{} validation error(s):\n{0}", .0.len())]
    Invalid(ValidationErrors),
    #[error("unknown member: {0}")]
    UnknownMember(MemberId),
    #[error("company size must be at least 3, got {0}")]
    CompanyTooSmall(usize),
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Checks manager references, levels and name uniqueness.
pub fn validate_employees(employees: &[EmployeeProfile]) -> Result<(), ModelError> {
    let mut errors = ValidationErrors::default();
    check_employees(employees, &mut errors);
    errors.into_result()
}

fn check_employees(employees: &[EmployeeProfile], errors: &mut ValidationErrors) -> BTreeSet<MemberId> {
    let mut names = BTreeSet::new();
    for (i, e) in employees.iter().enumerate() {
        if e.name.0.trim().is_empty() {
            errors.push(format!("employees[{i}]"), "empty name");
        }
        if !names.insert(e.name.clone()) {
            errors.push(format!("employees[{i}]"), format!("duplicate name {:?}", e.name.0));
        }
        if !(1..=5).contains(&e.level) {
            errors.push(
                format!("employees[{i}] ({})", e.name),
                format!("level {} outside 1..=5", e.level),
            );
        }
    }
    for (i, e) in employees.iter().enumerate() {
        if let Some(m) = &e.manager {
            if !names.contains(m) {
                errors.push(
                    format!("employees[{i}] ({})", e.name),
                    format!("manager {:?} is not an employee", m.0),
                );
            } else if m == &e.name {
                errors.push(format!("employees[{i}] ({})", e.name), "employee manages themself");
            }
        }
    }
    names
}

impl CompanyFixture {
    /// Validates everything and reports every problem found, not just the
    /// first one.
    pub fn validate(&self) -> Result<(), ModelError> {
        let mut errors = ValidationErrors::default();
        let names = check_employees(&self.employees, &mut errors);
        for (i, m) in self.meetings.iter().enumerate() {
            let loc = format!("meetings[{i}]");
            if !names.contains(&m.organizer) {
                errors.push(&loc, format!("organizer {:?} is not an employee", m.organizer.0));
            }
            if m.members.is_empty() {
                errors.push(&loc, "no members");
            }
            let mut seen = BTreeSet::new();
            for member in &m.members {
                if !names.contains(member) {
                    errors.push(&loc, format!("member {:?} is not an employee", member.0));
                }
                if !seen.insert(member) {
                    errors.push(&loc, format!("duplicate member {:?}", member.0));
                }
            }
            if m.duration_minutes == 0 {
                errors.push(&loc, "duration must be positive");
            }
        }
        errors.into_result()
    }

    pub fn employee(&self, id: &MemberId) -> Option<&EmployeeProfile> {
        self.employees.iter().find(|e| &e.name == id)
    }

    pub fn employee_index(&self) -> BTreeMap<&MemberId, &EmployeeProfile> {
        self.employees.iter().map(|e| (&e.name, e)).collect()
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let fixture: CompanyFixture = serde_json::from_str(text)?;
        fixture.validate()?;
        Ok(fixture)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("fixture serializes")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ModelError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ModelError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ModelError> {
        let path = path.as_ref();
        let mut text = self.to_json();
        text.push('\n');
        std::fs::write(path, text).map_err(|source| ModelError::Io {
            path: path.display().to_string(),
            source,
        })
    }
}
