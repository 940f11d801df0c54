use std::collections::HashMap;
use std::sync::OnceLock;

use regex::{Captures, Regex};

use super::{MemberRules, OptionView, SimWorld};
use crate::dialogue::{split_sentences, EXIT_SENTINEL};
use crate::metrics::likert_score;
use crate::model::MemberId;
use crate::schedule::{count_satisfied, is_acceptable, PreferenceRule, TimeSlot};

pub const REJECTION_PREFIX: &str = "None of these options work for me.";
pub const SUGGESTION_PREFIX: &str = "I suggest ";
pub const ACCEPT_SUFFIX: &str = "works for me.";

fn first_person_all(rules: &[PreferenceRule]) -> String {
    rules.iter().map(PreferenceRule::first_person).collect::<Vec<_>>().join(" ")
}

/// Acceptable slot satisfying the most rules, earliest first.
fn best_slot(rules: &[PreferenceRule], world: &SimWorld) -> Option<TimeSlot> {
    let mut best: Option<(usize, TimeSlot)> = None;
    for slot in world.universe.slots() {
        if !is_acceptable(rules, &slot, world.invite_time) {
            continue;
        }
        let c = count_satisfied(rules, &slot, world.invite_time);
        if best.is_none_or(|(bc, _)| c > bc) {
            best = Some((c, slot));
        }
    }
    best.map(|(_, s)| s)
}

/// What a simulated member says on their `turn`-th message (0-based).
///
/// Round 1: state every preference. Later rounds: accept the first option
/// that meets all hard preferences, otherwise reject citing the violated
/// preference and, when asked, propose the best slot for themselves.
pub fn member_reply(rules: &[PreferenceRule], world: &SimWorld, options: &[OptionView], turn: usize) -> String {
    let stated = first_person_all(rules);
    if options.is_empty() {
        return if turn == 0 {
            format!("Here are my preferences for this meeting. {stated}")
        } else {
            format!("As I said, {}", lowercase_first(&stated))
        };
    }
    if turn == 0 {
        for (j, o) in options.iter().enumerate() {
            if let Some(slot) = world.resolve(o) {
                if is_acceptable(rules, &slot, world.invite_time) {
                    return format!("Option {} ({}) {ACCEPT_SUFFIX}", j + 1, o.suggestion);
                }
            }
        }
        let violated = options
            .iter()
            .filter_map(|o| world.resolve(o))
            .find_map(|slot| {
                rules
                    .iter()
                    .find(|r| r.is_hard() && !r.satisfied_by(&slot, world.invite_time))
            });
        return match violated {
            Some(rule) => format!("{REJECTION_PREFIX} {}", rule.first_person()),
            None => format!("{REJECTION_PREFIX} {stated}"),
        };
    }
    match best_slot(rules, world) {
        Some(slot) => format!("{SUGGESTION_PREFIX}{} instead. {stated}", slot.suggestion()),
        None => format!("I cannot find a time that works for me. {stated}"),
    }
}

fn lowercase_first(s: &str) -> String {
    // Keep the pronoun "I" capitalized.
    if s.starts_with("I ") {
        return s.to_string();
    }
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_lowercase().collect::<String>() + c.as_str(),
        None => String::new(),
    }
}

/// The elicitation assistant's next message given the member's last one.
pub fn assistant_reply(member: &MemberId, world: &SimWorld, options: &[OptionView], last_member: Option<&str>) -> String {
    match last_member {
        None if options.is_empty() => format!(
            "Hi {member}, {} would like to schedule \"{}\" on {}. What are your preferences for the meeting time?",
            world.organizer,
            world.subject,
            world.date().format("%A, %b %-d")
        ),
        None => {
            let mut text = format!("Hi {member}, here are the suggested options for \"{}\":", world.subject);
            for (j, o) in options.iter().enumerate() {
                text.push_str(&format!("\n{}. {}", j + 1, o.suggestion));
                if !o.reasons.is_empty() {
                    text.push_str(&format!(" ({})", o.reasons.join("; ")));
                }
            }
            text.push_str("\nDoes one of these options work for you?");
            text
        }
        Some(msg) if msg.starts_with(REJECTION_PREFIX) => {
            "Could you explain why these options do not work for you and suggest an alternative time?".into()
        }
        Some(_) => format!("Thank you, I have noted your response. {EXIT_SENTINEL}"),
    }
}

/// Option a member agreed to or proposed, read back from their messages.
pub fn agreed_option(member_messages: &[String]) -> Option<String> {
    static RE: OnceLock<Regex> = OnceLock::new();
    let re = RE.get_or_init(|| {
        Regex::new(r"^(?:Option \d+ \((?P<accepted>.+?)\) works for me|I suggest (?P<proposed>.+?) instead)")
            .expect("valid regex")
    });
    member_messages.iter().rev().find_map(|m| {
        let caps = re.captures(m)?;
        caps.name("accepted")
            .or_else(|| caps.name("proposed"))
            .map(|c| c.as_str().to_string())
    })
}

/// Likert score of `slot` for one member's rules.
pub fn member_score(rules: &[PreferenceRule], slot: &TimeSlot, world: &SimWorld) -> u8 {
    let satisfied = count_satisfied(rules, slot, world.invite_time);
    likert_score(satisfied, rules.len())
        .expect("satisfied count never exceeds rule count")
        .value
}

/// Score grid (options × members) from structured preferences. Options
/// whose slot cannot be resolved score 0 for everyone.
pub fn evaluator_scores(preferences: &[MemberRules], options: &[OptionView], world: &SimWorld) -> Vec<Vec<u8>> {
    options
        .iter()
        .map(|o| match world.resolve(o) {
            Some(slot) => preferences.iter().map(|p| member_score(&p.rules, &slot, world)).collect(),
            None => vec![0; preferences.len()],
        })
        .collect()
}

/// Each group cycles on every rewrite; phrases are matched as whole words.
const SYNONYM_CYCLES: &[&[&str]] = &[
    &["in the morning", "before noon"],
    &["at least", "no less than"],
    &["in advance", "ahead of time"],
    &["does not want", "doesn't want"],
    &["do not want", "don't want"],
    &["needs", "requires"],
    &["need", "require"],
    &["appreciates", "welcomes"],
    &["appreciate", "welcome"],
    &["a shared calendar", "a shared schedule"],
    &["keep track of", "stay on top of"],
    &["is flexible with", "is flexible about"],
    &["are flexible with", "are flexible about"],
];

fn synonym_table() -> &'static (Regex, HashMap<String, &'static str>) {
    static TABLE: OnceLock<(Regex, HashMap<String, &'static str>)> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut next = HashMap::new();
        let mut phrases: Vec<&str> = Vec::new();
        for cycle in SYNONYM_CYCLES {
            for (i, p) in cycle.iter().enumerate() {
                next.insert(p.to_string(), cycle[(i + 1) % cycle.len()]);
                phrases.push(p);
            }
        }
        // Longest first so "needs" wins over "need".
        phrases.sort_by_key(|p| std::cmp::Reverse(p.len()));
        let alternation = phrases.iter().map(|p| regex::escape(p)).collect::<Vec<_>>().join("|");
        let re = Regex::new(&format!(r"\b(?:{alternation})\b")).expect("valid regex");
        (re, next)
    })
}

/// Deterministic paraphrase: swaps phrases for synonyms and moves the first
/// sentence to the end. Times, days and conditions are untouched.
pub fn mock_rewrite(text: &str) -> String {
    let (re, next) = synonym_table();
    let swapped = re.replace_all(text, |c: &Captures| next[&c[0]].to_string());
    let mut sentences = split_sentences(&swapped);
    if sentences.len() > 1 {
        sentences.rotate_left(1);
    }
    sentences.join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedule::{ClockTime, SlotUniverse};
    use chrono::NaiveDate;

    fn world() -> SimWorld {
        let date = NaiveDate::from_ymd_opt(2023, 2, 16).unwrap();
        SimWorld {
            universe: SlotUniverse::new(date, 30),
            invite_time: date.pred_opt().unwrap().and_hms_opt(9, 0, 0).unwrap(),
            organizer: "Member 9".into(),
            subject: "Sprint planning".into(),
        }
    }

    fn view(id: &str, h: u16) -> OptionView {
        let slot = TimeSlot::new(world().date(), ClockTime::hm(h, 0), 30);
        OptionView {
            id: id.into(),
            suggestion: slot.suggestion(),
            slot: Some(slot),
            reasons: vec![],
        }
    }

    #[test]
    fn member_accepts_first_acceptable_option() {
        let rules = [PreferenceRule::Morning];
        let reply = member_reply(&rules, &world(), &[view("option1", 14), view("option2", 10)], 0);
        assert_eq!(reply, "Option 2 (Feb 16, 10am) works for me.");
        assert_eq!(agreed_option(&[reply]).as_deref(), Some("Feb 16, 10am"));
    }

    #[test]
    fn member_rejects_then_suggests() {
        let rules = [PreferenceRule::Afternoon, PreferenceRule::AvoidLunch];
        let w = world();
        let first = member_reply(&rules, &w, &[view("option1", 9)], 0);
        assert!(first.starts_with(REJECTION_PREFIX), "{first}");
        assert!(first.contains("afternoon"));
        let second = member_reply(&rules, &w, &[view("option1", 9)], 1);
        assert!(second.starts_with("I suggest Feb 16, 1pm instead."), "{second}");
        assert_eq!(agreed_option(&[first, second]).as_deref(), Some("Feb 16, 1pm"));
    }

    #[test]
    fn assistant_exits_unless_rejected() {
        let w = world();
        let m: MemberId = "Member 1".into();
        assert!(!assistant_reply(&m, &w, &[], None).contains(EXIT_SENTINEL));
        assert!(!assistant_reply(&m, &w, &[], Some(REJECTION_PREFIX)).contains(EXIT_SENTINEL));
        assert!(assistant_reply(&m, &w, &[], Some("I prefer mornings.")).contains(EXIT_SENTINEL));
    }

    #[test]
    fn scores_follow_likert_bands() {
        let w = world();
        let prefs = [MemberRules {
            member: "Member 1".into(),
            rules: vec![PreferenceRule::Morning, PreferenceRule::MinNotice { hours: 24 }],
        }];
        let grid = evaluator_scores(&prefs, &[view("option1", 10), view("option2", 14)], &w);
        assert_eq!(grid, vec![vec![3], vec![2]]);
    }

    #[test]
    fn rewrite_is_deterministic_and_cycles() {
        let text = "She prefers to have meetings in the morning. She needs meetings to end by 4pm. She appreciates clear agendas.";
        let once = mock_rewrite(text);
        assert_eq!(
            once,
            "She requires meetings to end by 4pm. She welcomes clear agendas. She prefers to have meetings before noon."
        );
        assert_ne!(mock_rewrite(&once), once);
        let mut t = text.to_string();
        for _ in 0..6 {
            t = mock_rewrite(&t);
        }
        assert_eq!(t, text);
    }
}
