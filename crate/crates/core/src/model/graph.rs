use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{CompanyFixture, EmployeeProfile, Meeting, MemberId, ModelError, ValidationErrors};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Relation {
    Teammate,
    Collaborator,
    ManagerOf,
}

impl Relation {
    pub fn is_symmetric(self) -> bool {
        !matches!(self, Relation::ManagerOf)
    }
}

/// A relation between two employees. Symmetric relations are stored once
/// with `source <= target`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub source: MemberId,
    pub target: MemberId,
    pub relation: Relation,
}

impl Edge {
    pub fn new(a: MemberId, b: MemberId, relation: Relation) -> Self {
        if relation.is_symmetric() && b < a {
            Edge {
                source: b,
                target: a,
                relation,
            }
        } else {
            Edge {
                source: a,
                target: b,
                relation,
            }
        }
    }

    pub fn touches(&self, id: &MemberId) -> bool {
        &self.source == id || &self.target == id
    }

    /// The endpoint opposite `id`, if `id` is an endpoint.
    pub fn other(&self, id: &MemberId) -> Option<&MemberId> {
        if &self.source == id {
            Some(&self.target)
        } else if &self.target == id {
            Some(&self.source)
        } else {
            None
        }
    }
}

/// Public metadata of one employee.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeInfo {
    pub role: String,
    pub level: u8,
    #[serde(default)]
    pub manager: Option<MemberId>,
    pub responsibilities: Vec<String>,
}

impl From<&EmployeeProfile> for NodeInfo {
    fn from(e: &EmployeeProfile) -> Self {
        NodeInfo {
            role: e.role.clone(),
            level: e.level,
            manager: e.manager.clone(),
            responsibilities: e.responsibilities.clone(),
        }
    }
}

/// Employee metadata plus teammate, collaborator and manager relations.
/// Schedule preferences are deliberately absent.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(try_from = "RawGraph")]
pub struct KnowledgeGraph {
    pub nodes: BTreeMap<MemberId, NodeInfo>,
    pub edges: BTreeSet<Edge>,
}

#[derive(Deserialize)]
struct RawGraph {
    nodes: BTreeMap<MemberId, NodeInfo>,
    edges: Vec<Edge>,
}

impl TryFrom<RawGraph> for KnowledgeGraph {
    type Error = String;

    fn try_from(raw: RawGraph) -> Result<Self, Self::Error> {
        let mut edges = BTreeSet::new();
        for e in raw.edges {
            for end in [&e.source, &e.target] {
                if !raw.nodes.contains_key(end) {
                    return Err(format!("edge endpoint {end} is not a node"));
                }
            }
            edges.insert(Edge::new(e.source, e.target, e.relation));
        }
        Ok(KnowledgeGraph {
            nodes: raw.nodes,
            edges,
        })
    }
}

/// Employees that report to the same manager, per employee.
pub fn build_teammates(
    employees: &[EmployeeProfile],
) -> Result<BTreeMap<MemberId, BTreeSet<MemberId>>, ModelError> {
    let known: BTreeSet<&MemberId> = employees.iter().map(|e| &e.name).collect();
    let mut errors = ValidationErrors::default();
    for e in employees {
        if let Some(m) = &e.manager {
            if !known.contains(m) {
                errors.push(e.name.to_string(), format!("manager {:?} is not an employee", m.0));
            }
        }
    }
    errors.into_result()?;

    let mut by_manager: BTreeMap<&MemberId, Vec<&MemberId>> = BTreeMap::new();
    for e in employees {
        if let Some(m) = &e.manager {
            by_manager.entry(m).or_default().push(&e.name);
        }
    }
    let mut out: BTreeMap<MemberId, BTreeSet<MemberId>> =
        employees.iter().map(|e| (e.name.clone(), BTreeSet::new())).collect();
    for group in by_manager.values() {
        for a in group {
            for b in group {
                if a != b {
                    out.get_mut(*a).expect("known").insert((*b).clone());
                }
            }
        }
    }
    Ok(out)
}

/// Collaborator edges derived from shared meetings.
///
/// Each employee ranks the others they met at least once by shared-meeting
/// count (descending, ties by name) and selects the first ⌈|Q|/2⌉. The
/// result is the undirected union of all selections. Organizers count as
/// meeting participants.
pub fn build_collaborators(
    employees: &[EmployeeProfile],
    meetings: &[Meeting],
) -> Result<BTreeSet<Edge>, ModelError> {
    let known: BTreeSet<&MemberId> = employees.iter().map(|e| &e.name).collect();
    let mut errors = ValidationErrors::default();
    for (i, m) in meetings.iter().enumerate() {
        for id in m.members.iter().chain(std::iter::once(&m.organizer)) {
            if !known.contains(id) {
                errors.push(format!("meetings[{i}]"), format!("{:?} is not an employee", id.0));
            }
        }
    }
    errors.into_result()?;

    let mut counts: BTreeMap<&MemberId, BTreeMap<&MemberId, usize>> = BTreeMap::new();
    for m in meetings {
        let participants: BTreeSet<&MemberId> =
            m.members.iter().chain(std::iter::once(&m.organizer)).collect();
        for a in &participants {
            for b in &participants {
                if a != b {
                    *counts.entry(a).or_default().entry(b).or_default() += 1;
                }
            }
        }
    }

    let mut edges = BTreeSet::new();
    for (me, others) in counts {
        let mut ranked: Vec<(&MemberId, usize)> = others.into_iter().collect();
        ranked.sort_by(|(a, ca), (b, cb)| cb.cmp(ca).then_with(|| a.cmp(b)));
        let take = ranked.len().div_ceil(2);
        for (other, _) in ranked.into_iter().take(take) {
            edges.insert(Edge::new(me.clone(), other.clone(), Relation::Collaborator));
        }
    }
    Ok(edges)
}

impl KnowledgeGraph {
    pub fn build(employees: &[EmployeeProfile], meetings: &[Meeting]) -> Result<Self, ModelError> {
        let teammates = build_teammates(employees)?;
        let collaborators = build_collaborators(employees, meetings)?;
        let nodes = employees
            .iter()
            .map(|e| (e.name.clone(), NodeInfo::from(e)))
            .collect();
        let mut edges = collaborators;
        for (a, mates) in teammates {
            for b in mates {
                edges.insert(Edge::new(a.clone(), b, Relation::Teammate));
            }
        }
        for e in employees {
            if let Some(m) = &e.manager {
                edges.insert(Edge::new(m.clone(), e.name.clone(), Relation::ManagerOf));
            }
        }
        Ok(KnowledgeGraph { nodes, edges })
    }

    pub fn from_fixture(fixture: &CompanyFixture) -> Result<Self, ModelError> {
        Self::build(&fixture.employees, &fixture.meetings)
    }

    /// The subgraph on `members`: those nodes and every edge with both
    /// endpoints among them.
    pub fn induce(&self, members: &BTreeSet<MemberId>) -> Result<Self, ModelError> {
        if let Some(unknown) = members.iter().find(|m| !self.nodes.contains_key(*m)) {
            return Err(ModelError::UnknownMember(unknown.clone()));
        }
        let nodes = self
            .nodes
            .iter()
            .filter(|(id, _)| members.contains(*id))
            .map(|(id, n)| (id.clone(), n.clone()))
            .collect();
        let edges = self
            .edges
            .iter()
            .filter(|e| members.contains(&e.source) && members.contains(&e.target))
            .cloned()
            .collect();
        Ok(KnowledgeGraph { nodes, edges })
    }

    /// Neighbours of `id` under `relation`. Symmetric relations are
    /// answered in both directions; `ManagerOf` yields direct reports.
    pub fn neighbors(&self, id: &MemberId, relation: Relation) -> BTreeSet<MemberId> {
        self.edges
            .iter()
            .filter(|e| e.relation == relation)
            .filter_map(|e| {
                if relation.is_symmetric() {
                    e.other(id).cloned()
                } else if &e.source == id {
                    Some(e.target.clone())
                } else {
                    None
                }
            })
            .collect()
    }

    pub fn relations_between(&self, a: &MemberId, b: &MemberId) -> Vec<Relation> {
        self.edges
            .iter()
            .filter(|e| {
                (&e.source == a && &e.target == b)
                    || (e.relation.is_symmetric() && &e.source == b && &e.target == a)
            })
            .map(|e| e.relation)
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("graph serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        Ok(serde_json::from_str(text)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;

    fn emp(name: &str, manager: Option<&str>) -> EmployeeProfile {
        EmployeeProfile {
            name: name.into(),
            role: format!("role of {name}"),
            manager: manager.map(MemberId::from),
            level: 2,
            responsibilities: vec![format!("duties of {name}")],
            schedule_preferences: format!("SECRET preference of {name}"),
            preference_rules: vec![],
            pronoun: None,
        }
    }

    fn meeting(organizer: &str, members: &[&str]) -> Meeting {
        Meeting {
            organizer: organizer.into(),
            members: members.iter().map(|m| MemberId::from(*m)).collect(),
            subject: "sync".into(),
            date: NaiveDate::from_ymd_opt(2023, 2, 16).unwrap(),
            duration_minutes: 30,
        }
    }

    fn id(s: &str) -> MemberId {
        MemberId::from(s)
    }

    #[test]
    fn shared_manager_makes_teammates() {
        let employees = vec![
            emp("Member 1", None),
            emp("Member 33", Some("Member 1")),
            emp("Member 34", Some("Member 1")),
            emp("Member 29", Some("Member 22")),
            emp("Member 22", Some("Member 1")),
        ];
        let t = build_teammates(&employees).unwrap();
        assert!(t[&id("Member 33")].contains(&id("Member 34")));
        assert!(t[&id("Member 34")].contains(&id("Member 33")));
        // Member 29 is the only report of Member 22.
        assert!(t[&id("Member 29")].is_empty());
        assert!(t[&id("Member 1")].is_empty());
        for (a, set) in &t {
            assert!(!set.contains(a));
            for b in set {
                assert!(t[b].contains(a));
            }
        }
    }

    #[test]
    fn dangling_manager_lists_all_offenders() {
        let employees = vec![emp("A", Some("X")), emp("B", Some("Y")), emp("C", None)];
        match build_teammates(&employees) {
            Err(ModelError::Invalid(errs)) => assert_eq!(errs.len(), 2),
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn collaborators_take_top_half_by_count() {
        // E meets A three times, B and C once each, D never.
        let employees: Vec<_> = ["A", "B", "C", "D", "E", "O"].iter().map(|n| emp(n, None)).collect();
        let meetings = vec![
            meeting("E", &["A"]),
            meeting("E", &["A"]),
            meeting("E", &["A", "B"]),
            meeting("E", &["C"]),
        ];
        let edges = build_collaborators(&employees, &meetings).unwrap();
        let e_collab: BTreeSet<_> = edges
            .iter()
            .filter(|x| x.touches(&id("E")))
            .filter_map(|x| x.other(&id("E")).cloned())
            .collect();
        // E selects {A, B}; C selects E (its only partner) so the symmetric
        // closure adds (C, E) as well.
        assert_eq!(e_collab, [id("A"), id("B"), id("C")].into_iter().collect());
        assert!(!edges.iter().any(|x| x.touches(&id("D"))));
        assert!(!edges.iter().any(|x| x.touches(&id("O"))));
    }

    #[test]
    fn selection_of_one_employee_matches_enumeration() {
        // Counts for E: A=3, B=1, C=1 → Q=[A,B,C], take ⌈3/2⌉ = 2 → {A, B}.
        let mut counts = [("A", 3usize), ("B", 1), ("C", 1)];
        counts.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
        let picked: Vec<_> = counts.iter().take(2).map(|c| c.0).collect();
        assert_eq!(picked, ["A", "B"]);
    }

    fn appendix_graph() -> KnowledgeGraph {
        let names = ["Member 1", "Member 4", "Member 12", "Member 13", "Member 34", "Member 7", "Member 9"];
        let nodes = names
            .iter()
            .map(|n| (id(n), NodeInfo::from(&emp(n, None))))
            .collect();
        let pairs = [
            ("Member 4", "Member 34"),
            ("Member 4", "Member 1"),
            ("Member 4", "Member 13"),
            ("Member 34", "Member 1"),
            ("Member 34", "Member 13"),
            ("Member 12", "Member 1"),
            ("Member 12", "Member 13"),
            ("Member 1", "Member 13"),
            // outside the meeting
            ("Member 7", "Member 1"),
            ("Member 9", "Member 4"),
        ];
        let mut edges: BTreeSet<Edge> = pairs
            .iter()
            .map(|(a, b)| Edge::new(id(a), id(b), Relation::Collaborator))
            .collect();
        edges.insert(Edge::new(id("Member 7"), id("Member 9"), Relation::ManagerOf));
        KnowledgeGraph { nodes, edges }
    }

    #[test]
    fn appendix_meeting_subgraph_has_eight_edges() {
        let g = appendix_graph();
        let members: BTreeSet<_> = ["Member 4", "Member 34", "Member 1", "Member 13", "Member 12"]
            .iter()
            .map(|s| id(s))
            .collect();
        let sub = g.induce(&members).unwrap();
        assert_eq!(sub.nodes.len(), 5);
        assert_eq!(sub.edges.len(), 8);
        assert!(sub
            .relations_between(&id("Member 34"), &id("Member 4"))
            .contains(&Relation::Collaborator));
    }

    #[test]
    fn induce_edge_cases() {
        let g = appendix_graph();
        assert_eq!(g.induce(&BTreeSet::new()).unwrap(), KnowledgeGraph::default());
        let all: BTreeSet<_> = g.nodes.keys().cloned().collect();
        assert_eq!(g.induce(&all).unwrap(), g);
        let err = g.induce(&[id("Member 99")].into_iter().collect()).unwrap_err();
        assert!(err.to_string().contains("Member 99"));
    }

    #[test]
    fn graph_excludes_schedule_preferences() {
        let employees = vec![emp("A", None), emp("B", Some("A")), emp("C", Some("A"))];
        let g = KnowledgeGraph::build(&employees, &[meeting("A", &["B", "C"])]).unwrap();
        let json = g.to_json();
        assert!(!json.contains("SECRET"));
        assert!(!json.contains("schedule_preferences"));
        assert_eq!(KnowledgeGraph::from_json(&json).unwrap(), g);
        assert_eq!(g.neighbors(&id("A"), Relation::ManagerOf).len(), 2);
        assert!(g.neighbors(&id("C"), Relation::Teammate).contains(&id("B")));
    }

    #[test]
    fn parse_normalizes_symmetric_edges() {
        let text = r#"{"nodes": {"A": {"role": "r", "level": 1, "responsibilities": []},
                                 "B": {"role": "r", "level": 1, "responsibilities": []}},
                       "edges": [{"source": "B", "target": "A", "relation": "collaborator"},
                                 {"source": "A", "target": "B", "relation": "collaborator"}]}"#;
        let g = KnowledgeGraph::from_json(text).unwrap();
        assert_eq!(g.edges.len(), 1);
        let bad = r#"{"nodes": {}, "edges": [{"source": "B", "target": "A", "relation": "teammate"}]}"#;
        assert!(KnowledgeGraph::from_json(bad).is_err());
    }
}
