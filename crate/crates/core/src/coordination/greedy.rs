//! Coverage-greedy coordinator used by the simulation.

use super::option::{option_id, ProposedOption};
use crate::model::MemberId;
use crate::schedule::{is_acceptable, TimeSlot};
use crate::sim::{member_score, MemberRules, OptionView, SimWorld};

pub struct GreedyInput<'a> {
    pub round: u32,
    pub k: usize,
    pub preferences: &'a [MemberRules],
    pub world: &'a SimWorld,
    pub candidate: Option<&'a OptionView>,
    /// Members with a positive score on the candidate last round.
    pub candidate_users: usize,
    pub proposed: &'a [TimeSlot],
    pub required: &'a [MemberId],
}

/// Members for whom `slot` meets every hard preference.
pub fn acceptance_coverage(preferences: &[MemberRules], slot: &TimeSlot, world: &SimWorld) -> usize {
    preferences
        .iter()
        .filter(|p| is_acceptable(&p.rules, slot, world.invite_time))
        .count()
}

fn positive_count(preferences: &[MemberRules], slot: &TimeSlot, world: &SimWorld) -> usize {
    preferences
        .iter()
        .filter(|p| member_score(&p.rules, slot, world) > 0)
        .count()
}

/// Every slot of the day with its coverage, best first; ties keep the
/// earlier slot first.
pub fn rank_slots(preferences: &[MemberRules], world: &SimWorld) -> Vec<(TimeSlot, usize)> {
    let mut ranked: Vec<(TimeSlot, usize)> = world
        .universe
        .slots()
        .into_iter()
        .map(|s| {
            let c = acceptance_coverage(preferences, &s, world);
            (s, c)
        })
        .collect();
    // stable sort keeps chronological order among equal coverage
    ranked.sort_by_key(|&(_, c)| std::cmp::Reverse(c));
    ranked
}

fn build_option(index: usize, slot: TimeSlot, preferences: &[MemberRules], world: &SimWorld) -> ProposedOption {
    let mut users = Vec::new();
    let mut reasons = Vec::new();
    for p in preferences {
        if !is_acceptable(&p.rules, &slot, world.invite_time) {
            continue;
        }
        users.push(p.member.clone());
        let met: Vec<String> = p
            .rules
            .iter()
            .filter(|r| r.satisfied_by(&slot, world.invite_time))
            .map(|r| r.restatement())
            .collect();
        if !met.is_empty() {
            reasons.push(format!("{}: {}", p.member, met.join(", ")));
        }
    }
    if reasons.is_empty() {
        reasons.push("earliest open slot".into());
    }
    ProposedOption {
        id: option_id(index),
        suggestion: slot.suggestion(),
        satisfied_members: users,
        reasons,
        slot: Some(slot),
    }
}

/// Round 1: the K best-covered slots that at least two members accept.
/// Later rounds: the candidate first, then up to K-1 unproposed slots that
/// satisfy at least as many members as the candidate did. When a required
/// attendee accepts none of the picks, the last new pick is swapped for the
/// best slot they accept.
pub fn greedy_options(input: &GreedyInput<'_>) -> Vec<ProposedOption> {
    let world = input.world;
    let prefs = input.preferences;
    let ranked = rank_slots(prefs, world);
    let mut picks: Vec<TimeSlot> = Vec::new();
    let candidate_slot = input.candidate.and_then(|c| world.resolve(c));
    let fixed = usize::from(candidate_slot.is_some());

    match candidate_slot {
        None => {
            picks.extend(ranked.iter().filter(|(_, c)| *c >= 2).take(input.k).map(|(s, _)| *s));
            if picks.is_empty() {
                picks.extend(ranked.first().map(|(s, _)| *s));
            }
        }
        Some(cand) => {
            picks.push(cand);
            picks.extend(
                ranked
                    .iter()
                    .map(|(s, _)| *s)
                    .filter(|s| *s != cand && !input.proposed.contains(s))
                    .filter(|s| positive_count(prefs, s, world) >= input.candidate_users)
                    .take(input.k.saturating_sub(1)),
            );
        }
    }

    for required in input.required {
        let Some(rules) = prefs.iter().find(|p| &p.member == required).map(|p| &p.rules) else {
            continue;
        };
        if picks.iter().any(|s| is_acceptable(rules, s, world.invite_time)) {
            continue;
        }
        let Some(alt) = ranked
            .iter()
            .map(|(s, _)| *s)
            .find(|s| is_acceptable(rules, s, world.invite_time) && !picks.contains(s))
        else {
            continue;
        };
        if picks.len() < input.k {
            picks.push(alt);
        } else if picks.len() > fixed {
            *picks.last_mut().expect("non-empty") = alt;
        }
    }

    picks
        .into_iter()
        .enumerate()
        .map(|(j, s)| {
            let mut o = build_option(j, s, prefs, world);
            if j == 0 {
                if let Some(c) = input.candidate {
                    o.suggestion = c.suggestion.clone();
                }
            }
            o
        })
        .collect()
}
