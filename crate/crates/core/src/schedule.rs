//! Time slots on a meeting date and the structured schedule preferences the
//! simulation uses as ground truth.
//!
//! Live runs never look at [`PreferenceRule`]s; they only exist so the mock
//! backend can score options with a closed, checkable oracle.

use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate, NaiveDateTime, NaiveTime};
use regex::Regex;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// First bookable minute of the business day (08:00).
pub const DAY_START: ClockTime = ClockTime(8 * 60);
/// Last minute a meeting may run to (18:00).
pub const DAY_END: ClockTime = ClockTime(18 * 60);
/// Slot granularity in minutes.
pub const SLOT_STEP_MINUTES: u16 = 30;

const LUNCH_START: ClockTime = ClockTime(12 * 60);
const LUNCH_END: ClockTime = ClockTime(13 * 60);
const AFTERNOON_END: ClockTime = ClockTime(17 * 60);
const LATE_AFTERNOON_START: ClockTime = ClockTime(15 * 60);

/// Minutes since midnight. Serialized as `"HH:MM"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ClockTime(pub u16);

impl ClockTime {
    pub fn hm(hour: u16, minute: u16) -> Self {
        ClockTime(hour * 60 + minute)
    }

    pub fn hour(self) -> u16 {
        self.0 / 60
    }

    pub fn minute(self) -> u16 {
        self.0 % 60
    }

    pub fn to_naive_time(self) -> NaiveTime {
        NaiveTime::from_hms_opt(u32::from(self.hour()), u32::from(self.minute()), 0)
            .expect("clock time within a day")
    }

    /// `10am`, `10:30am`, `12pm`.
    pub fn twelve_hour(self) -> String {
        let (h, m) = (self.hour(), self.minute());
        let suffix = if h >= 12 { "pm" } else { "am" };
        let h12 = match h % 12 {
            0 => 12,
            other => other,
        };
        if m == 0 {
            format!("{h12}{suffix}")
        } else {
            format!("{h12}:{m:02}{suffix}")
        }
    }
}

impl fmt::Display for ClockTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:02}:{:02}", self.hour(), self.minute())
    }
}

impl FromStr for ClockTime {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (h, m) = s
            .split_once(':')
            .ok_or_else(|| format!("expected HH:MM, got {s:?}"))?;
        let h: u16 = h.trim().parse().map_err(|_| format!("bad hour in {s:?}"))?;
        let m: u16 = m.trim().parse().map_err(|_| format!("bad minute in {s:?}"))?;
        if h > 23 || m > 59 {
            return Err(format!("clock time out of range: {s:?}"));
        }
        Ok(ClockTime::hm(h, m))
    }
}

impl Serialize for ClockTime {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ClockTime {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A concrete meeting time on a given date.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TimeSlot {
    pub date: NaiveDate,
    pub start: ClockTime,
    pub duration_minutes: u16,
}

impl TimeSlot {
    pub fn new(date: NaiveDate, start: ClockTime, duration_minutes: u16) -> Self {
        Self {
            date,
            start,
            duration_minutes,
        }
    }

    pub fn end(&self) -> ClockTime {
        ClockTime(self.start.0 + self.duration_minutes)
    }

    pub fn start_datetime(&self) -> NaiveDateTime {
        self.date.and_time(self.start.to_naive_time())
    }

    /// Human-readable proposal text, e.g. `Feb 16, 10am`.
    pub fn suggestion(&self) -> String {
        format!("{}, {}", self.date.format("%b %-d"), self.start.twelve_hour())
    }

    /// Recovers a slot from proposal text such as `Feb 16, 10:30am`.
    ///
    /// The year comes from `date_hint`; text without a recognizable month,
    /// day and time yields `None`.
    pub fn parse_suggestion(text: &str, date_hint: NaiveDate, duration_minutes: u16) -> Option<Self> {
        static PATTERN: std::sync::OnceLock<Regex> = std::sync::OnceLock::new();
        let re = PATTERN.get_or_init(|| {
            Regex::new(r"(?i)\b(jan|feb|mar|apr|may|jun|jul|aug|sep|oct|nov|dec)[a-z]*\.?\s+(\d{1,2}),?\s+(?:at\s+)?(\d{1,2})(?::(\d{2}))?\s*(am|pm)\b")
                .expect("valid regex")
        });
        let caps = re.captures(text)?;
        let month = match caps[1].to_ascii_lowercase().as_str() {
            "jan" => 1,
            "feb" => 2,
            "mar" => 3,
            "apr" => 4,
            "may" => 5,
            "jun" => 6,
            "jul" => 7,
            "aug" => 8,
            "sep" => 9,
            "oct" => 10,
            "nov" => 11,
            _ => 12,
        };
        let day: u32 = caps[2].parse().ok()?;
        let mut hour: u16 = caps[3].parse().ok()?;
        let minute: u16 = caps.get(4).map_or(Some(0), |m| m.as_str().parse().ok())?;
        if hour == 0 || hour > 12 || minute > 59 {
            return None;
        }
        let pm = caps[5].eq_ignore_ascii_case("pm");
        if pm && hour != 12 {
            hour += 12;
        } else if !pm && hour == 12 {
            hour = 0;
        }
        let date = NaiveDate::from_ymd_opt(date_hint.year(), month, day)?;
        Some(TimeSlot::new(date, ClockTime::hm(hour, minute), duration_minutes))
    }
}

/// All bookable slots of one meeting: 30-minute starts from 08:00 such that
/// the meeting ends by 18:00.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotUniverse {
    pub date: NaiveDate,
    pub duration_minutes: u16,
}

impl SlotUniverse {
    pub fn new(date: NaiveDate, duration_minutes: u16) -> Self {
        Self {
            date,
            duration_minutes,
        }
    }

    pub fn slots(&self) -> Vec<TimeSlot> {
        let mut out = Vec::new();
        let mut start = DAY_START.0;
        while start + self.duration_minutes <= DAY_END.0 {
            out.push(TimeSlot::new(self.date, ClockTime(start), self.duration_minutes));
            start += SLOT_STEP_MINUTES;
        }
        out
    }

    pub fn contains(&self, slot: &TimeSlot) -> bool {
        slot.date == self.date
            && slot.duration_minutes == self.duration_minutes
            && slot.start >= DAY_START
            && slot.end() <= DAY_END
            && (slot.start.0 - DAY_START.0).is_multiple_of(SLOT_STEP_MINUTES)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pronoun {
    She,
    He,
    They,
}

impl Pronoun {
    pub fn subject(self) -> &'static str {
        match self {
            Pronoun::She => "She",
            Pronoun::He => "He",
            Pronoun::They => "They",
        }
    }

    pub fn possessive(self) -> &'static str {
        match self {
            Pronoun::She => "her",
            Pronoun::He => "his",
            Pronoun::They => "their",
        }
    }

    /// Conjugates a third-person verb (`prefers` → `prefer` for *they*).
    fn verb<'a>(self, singular: &'a str, plural: &'a str) -> &'a str {
        match self {
            Pronoun::They => plural,
            _ => singular,
        }
    }
}

/// One structured schedule preference.
///
/// Everything except [`PreferenceRule::MinNotice`] constrains the time of
/// day; notice is a soft attribute measured from the invite time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PreferenceRule {
    /// Meeting held entirely before noon.
    Morning,
    /// Meeting between 12:00 and 17:00.
    Afternoon,
    /// Meeting starting at 15:00 or later.
    LateAfternoon,
    NotBefore { time: ClockTime },
    FinishBy { time: ClockTime },
    /// Meeting does not overlap 12:00–13:00.
    AvoidLunch,
    MinNotice { hours: u16 },
}

impl PreferenceRule {
    /// Hard rules decide whether a simulated member accepts a slot.
    pub fn is_hard(&self) -> bool {
        !matches!(self, PreferenceRule::MinNotice { .. })
    }

    pub fn satisfied_by(&self, slot: &TimeSlot, invite_time: NaiveDateTime) -> bool {
        match *self {
            PreferenceRule::Morning => slot.end() <= LUNCH_START,
            PreferenceRule::Afternoon => slot.start >= LUNCH_START && slot.end() <= AFTERNOON_END,
            PreferenceRule::LateAfternoon => slot.start >= LATE_AFTERNOON_START,
            PreferenceRule::NotBefore { time } => slot.start >= time,
            PreferenceRule::FinishBy { time } => slot.end() <= time,
            PreferenceRule::AvoidLunch => slot.end() <= LUNCH_START || slot.start >= LUNCH_END,
            PreferenceRule::MinNotice { hours } => {
                let notice = slot.start_datetime() - invite_time;
                notice.num_minutes() >= i64::from(hours) * 60
            }
        }
    }

    /// Third-person sentence as it appears in an employee profile.
    pub fn describe(&self, pronoun: Pronoun) -> String {
        let p = pronoun.subject();
        let v = |s, pl| pronoun.verb(s, pl);
        match *self {
            PreferenceRule::Morning => {
                format!("{p} {} to have meetings in the morning.", v("prefers", "prefer"))
            }
            PreferenceRule::Afternoon => {
                format!("{p} {} to have meetings in the afternoon.", v("prefers", "prefer"))
            }
            PreferenceRule::LateAfternoon => format!(
                "{p} {} to have meetings in the late afternoon, from 3pm onwards.",
                v("likes", "like")
            ),
            PreferenceRule::NotBefore { time } => format!(
                "{p} {} meetings to start before {}.",
                v("does not want", "do not want"),
                time.twelve_hour()
            ),
            PreferenceRule::FinishBy { time } => format!(
                "{p} {} meetings to end by {}.",
                v("needs", "need"),
                time.twelve_hour()
            ),
            PreferenceRule::AvoidLunch => format!(
                "{p} {} to keep the lunch hour between 12pm and 1pm free.",
                v("wants", "want")
            ),
            PreferenceRule::MinNotice { hours } => format!(
                "{p} {} to have meetings scheduled at least {} in advance.",
                v("prefers", "prefer"),
                notice_phrase(hours)
            ),
        }
    }

    /// First-person statement used by the simulated member.
    pub fn first_person(&self) -> String {
        match *self {
            PreferenceRule::Morning => "I prefer to have meetings in the morning.".into(),
            PreferenceRule::Afternoon => "I prefer to have meetings in the afternoon.".into(),
            PreferenceRule::LateAfternoon => {
                "I like to have meetings in the late afternoon, from 3pm onwards.".into()
            }
            PreferenceRule::NotBefore { time } => {
                format!("I do not want meetings to start before {}.", time.twelve_hour())
            }
            PreferenceRule::FinishBy { time } => {
                format!("I need meetings to end by {}.", time.twelve_hour())
            }
            PreferenceRule::AvoidLunch => {
                "I want to keep the lunch hour between 12pm and 1pm free.".into()
            }
            PreferenceRule::MinNotice { hours } => format!(
                "I prefer to have meetings scheduled at least {} in advance.",
                notice_phrase(hours)
            ),
        }
    }

    /// Compact restatement, the form extracted preferences take.
    pub fn restatement(&self) -> String {
        match *self {
            PreferenceRule::Morning => "meetings in the morning (ending by 12pm)".into(),
            PreferenceRule::Afternoon => "meetings in the afternoon (12pm to 5pm)".into(),
            PreferenceRule::LateAfternoon => "meetings in the late afternoon (from 3pm)".into(),
            PreferenceRule::NotBefore { time } => format!("no meetings before {}", time.twelve_hour()),
            PreferenceRule::FinishBy { time } => format!("meetings ending by {}", time.twelve_hour()),
            PreferenceRule::AvoidLunch => "lunch hour 12pm to 1pm kept free".into(),
            PreferenceRule::MinNotice { hours } => {
                format!("at least {} notice", notice_phrase(hours))
            }
        }
    }
}

fn notice_phrase(hours: u16) -> String {
    match hours {
        3 => "a few hours".into(),
        24 => "a day".into(),
        48 => "two days".into(),
        h if h % 24 == 0 => format!("{} days", h / 24),
        h => format!("{h} hours"),
    }
}

/// Number of `rules` a slot satisfies.
pub fn count_satisfied(rules: &[PreferenceRule], slot: &TimeSlot, invite_time: NaiveDateTime) -> usize {
    rules
        .iter()
        .filter(|r| r.satisfied_by(slot, invite_time))
        .count()
}

/// A slot is acceptable when it meets every hard rule.
pub fn is_acceptable(rules: &[PreferenceRule], slot: &TimeSlot, invite_time: NaiveDateTime) -> bool {
    rules
        .iter()
        .filter(|r| r.is_hard())
        .all(|r| r.satisfied_by(slot, invite_time))
}
