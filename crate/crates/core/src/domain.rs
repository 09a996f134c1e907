//! Core registration entities and their invariants.
//!
//! Everything here is a plain value type. Rules, persistence and
//! concurrency live in other modules.

use std::borrow::Borrow;
use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Timestamp = DateTime<Utc>;

/// Default SKS ceiling for a student with no staff override.
pub const DEFAULT_CREDIT_CAP: u32 = 24;

/// Default minimum enrollment before staff are prompted to consider cancelling.
pub const DEFAULT_MIN_ENROLLMENT: u32 = 10;

pub const MAX_COURSE_CREDITS: u32 = 12;

macro_rules! string_id {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(String);

        impl $name {
            pub fn new(value: impl Into<String>) -> Self {
                Self(value.into())
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.pad(&self.0)
            }
        }

        impl Borrow<str> for $name {
            fn borrow(&self) -> &str {
                &self.0
            }
        }

        impl From<&str> for $name {
            fn from(value: &str) -> Self {
                Self(value.to_owned())
            }
        }

        impl From<String> for $name {
            fn from(value: String) -> Self {
                Self(value)
            }
        }
    };
}

string_id!(
    /// Course code such as `ET3020`.
    CourseCode
);
string_id!(
    /// Opaque section identifier.
    SectionId
);
string_id!(
    /// Student number.
    Nim
);
string_id!(
    /// Term code in `YYYYS` form, `S` being the semester digit 1..=3.
    TermCode
);

impl TermCode {
    /// Validates the `YYYYS` pattern.
    pub fn parse(raw: &str) -> Result<Self, DomainError> {
        let bytes = raw.as_bytes();
        let ok = bytes.len() == 5
            && bytes.iter().all(u8::is_ascii_digit)
            && matches!(bytes[4], b'1'..=b'3');
        if ok {
            Ok(Self(raw.to_owned()))
        } else {
            Err(DomainError::InvalidTerm(format!(
                "term code {raw:?} does not match YYYYS with S in 1..=3"
            )))
        }
    }

    pub fn year(&self) -> u32 {
        self.0[..4].parse().unwrap_or(0)
    }

    pub fn semester(&self) -> u8 {
        self.0.as_bytes().get(4).map_or(0, |b| b - b'0')
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DomainError {
    #[error("invalid course: {0}")]
    InvalidCourse(String),
    #[error("invalid meeting time: {0}")]
    InvalidMeeting(String),
    #[error("invalid section: {0}")]
    InvalidSection(String),
    #[error("invalid term: {0}")]
    InvalidTerm(String),
    #[error("invalid student profile: {0}")]
    InvalidProfile(String),
    #[error("invalid academic record: {0}")]
    InvalidRecord(String),
    #[error("ILLEGAL_TRANSITION: {from} -> {to}")]
    IllegalTransition { from: LineStatus, to: LineStatus },
    #[error("section {0} does not resolve to a catalog course")]
    UnresolvedSection(SectionId),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Course {
    pub code: CourseCode,
    pub title: String,
    pub credits: u32,
    pub prerequisites: BTreeSet<CourseCode>,
}

impl Course {
    pub fn new(
        code: impl Into<CourseCode>,
        title: impl Into<String>,
        credits: u32,
        prerequisites: impl IntoIterator<Item = CourseCode>,
    ) -> Result<Self, DomainError> {
        let code = code.into();
        if code.as_str().trim().is_empty() {
            return Err(DomainError::InvalidCourse("course code is empty".into()));
        }
        if !(1..=MAX_COURSE_CREDITS).contains(&credits) {
            return Err(DomainError::InvalidCourse(format!(
                "{code}: credits {credits} outside 1..={MAX_COURSE_CREDITS}"
            )));
        }
        let prerequisites: BTreeSet<CourseCode> = prerequisites.into_iter().collect();
        if prerequisites.contains(&code) {
            return Err(DomainError::InvalidCourse(format!(
                "{code} lists itself as a prerequisite"
            )));
        }
        Ok(Self {
            code,
            title: title.into(),
            credits,
            prerequisites,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Weekday {
    Mon,
    Tue,
    Wed,
    Thu,
    Fri,
    Sat,
    Sun,
}

impl Weekday {
    pub const ALL: [Weekday; 7] = [
        Weekday::Mon,
        Weekday::Tue,
        Weekday::Wed,
        Weekday::Thu,
        Weekday::Fri,
        Weekday::Sat,
        Weekday::Sun,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Weekday::Mon => "MON",
            Weekday::Tue => "TUE",
            Weekday::Wed => "WED",
            Weekday::Thu => "THU",
            Weekday::Fri => "FRI",
            Weekday::Sat => "SAT",
            Weekday::Sun => "SUN",
        }
    }
}

impl fmt::Display for Weekday {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Weekday {
    type Err = DomainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Weekday::ALL
            .into_iter()
            .find(|d| d.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| DomainError::InvalidMeeting(format!("unknown day {s:?}")))
    }
}

pub const MINUTES_PER_DAY: u16 = 1440;

/// A weekly repeating slot, `[start, end)` in minutes from midnight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawMeeting", into = "RawMeeting")]
pub struct MeetingTime {
    day: Weekday,
    start: u16,
    end: u16,
}

#[derive(Serialize, Deserialize)]
struct RawMeeting {
    day: Weekday,
    start: u16,
    end: u16,
}

impl TryFrom<RawMeeting> for MeetingTime {
    type Error = DomainError;
    fn try_from(raw: RawMeeting) -> Result<Self, Self::Error> {
        MeetingTime::new(raw.day, raw.start, raw.end)
    }
}

impl From<MeetingTime> for RawMeeting {
    fn from(m: MeetingTime) -> Self {
        RawMeeting {
            day: m.day,
            start: m.start,
            end: m.end,
        }
    }
}

impl MeetingTime {
    pub fn new(day: Weekday, start: u16, end: u16) -> Result<Self, DomainError> {
        if start >= end || end > MINUTES_PER_DAY {
            return Err(DomainError::InvalidMeeting(format!(
                "{day} {start}-{end}: need 0 <= start < end <= {MINUTES_PER_DAY}"
            )));
        }
        Ok(Self { day, start, end })
    }

    pub fn day(&self) -> Weekday {
        self.day
    }

    pub fn start(&self) -> u16 {
        self.start
    }

    pub fn end(&self) -> u16 {
        self.end
    }
}

fn parse_clock(raw: &str) -> Option<u16> {
    let (h, m) = raw.split_once(':')?;
    if h.is_empty() || h.len() > 2 || m.len() != 2 {
        return None;
    }
    let h: u16 = h.parse().ok()?;
    let m: u16 = m.parse().ok()?;
    (m < 60 && h * 60 + m <= MINUTES_PER_DAY).then_some(h * 60 + m)
}

impl FromStr for MeetingTime {
    type Err = DomainError;

    /// Parses `DAY hh:mm-hh:mm`, e.g. `MON 07:30-09:10`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || DomainError::InvalidMeeting(format!("cannot parse {s:?}, expected DAY hh:mm-hh:mm"));
        let (day, span) = s.trim().split_once(' ').ok_or_else(bad)?;
        let (start, end) = span.trim().split_once('-').ok_or_else(bad)?;
        let start = parse_clock(start.trim()).ok_or_else(bad)?;
        let end = parse_clock(end.trim()).ok_or_else(bad)?;
        MeetingTime::new(day.parse()?, start, end)
    }
}

impl fmt::Display for MeetingTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {:02}:{:02}-{:02}:{:02}",
            self.day,
            self.start / 60,
            self.start % 60,
            self.end / 60,
            self.end % 60
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SectionState {
    Open,
    Confirmed,
    Cancelled,
}

impl fmt::Display for SectionState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            SectionState::Open => "Open",
            SectionState::Confirmed => "Confirmed",
            SectionState::Cancelled => "Cancelled",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Section {
    pub section_id: SectionId,
    pub course_code: CourseCode,
    pub class_label: String,
    pub term_code: TermCode,
    pub capacity: u32,
    pub meetings: Vec<MeetingTime>,
    pub lecturer: String,
    pub state: SectionState,
}

impl Section {
    /// Builds an `Open` section, checking capacity and that its own meetings
    /// do not overlap.
    pub fn new(
        section_id: impl Into<SectionId>,
        course_code: impl Into<CourseCode>,
        class_label: impl Into<String>,
        term_code: TermCode,
        capacity: u32,
        meetings: Vec<MeetingTime>,
        lecturer: impl Into<String>,
    ) -> Result<Self, DomainError> {
        let section_id = section_id.into();
        if section_id.as_str().trim().is_empty() {
            return Err(DomainError::InvalidSection("section id is empty".into()));
        }
        if capacity == 0 {
            return Err(DomainError::InvalidSection(format!(
                "{section_id}: capacity must be at least 1"
            )));
        }
        if meetings.is_empty() {
            return Err(DomainError::InvalidSection(format!(
                "{section_id}: no meeting times"
            )));
        }
        for (i, a) in meetings.iter().enumerate() {
            for b in &meetings[i + 1..] {
                if crate::timetable::meetings_overlap(a, b) {
                    return Err(DomainError::InvalidSection(format!(
                        "{section_id}: meetings {a} and {b} overlap"
                    )));
                }
            }
        }
        Ok(Self {
            section_id,
            course_code: course_code.into(),
            class_label: class_label.into(),
            term_code,
            capacity,
            meetings,
            lecturer: lecturer.into(),
            state: SectionState::Open,
        })
    }
}

/// Closed interval `[open_at, close_at]`; both bounds are inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub open_at: Timestamp,
    pub close_at: Timestamp,
}

impl Window {
    pub fn new(open_at: Timestamp, close_at: Timestamp) -> Result<Self, DomainError> {
        if open_at >= close_at {
            return Err(DomainError::InvalidTerm(format!(
                "window opens at {open_at} but closes at {close_at}"
            )));
        }
        Ok(Self { open_at, close_at })
    }

    pub fn contains(&self, at: Timestamp) -> bool {
        self.open_at <= at && at <= self.close_at
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Term {
    pub term_code: TermCode,
    pub registration_window: Window,
    pub payment_window: Window,
    /// Optional add/change period; lines committed inside it are `Added`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub add_window: Option<Window>,
    pub min_enrollment: u32,
}

impl Term {
    pub fn new(
        term_code: TermCode,
        registration_window: Window,
        payment_window: Window,
        min_enrollment: u32,
    ) -> Self {
        Self {
            term_code,
            registration_window,
            payment_window,
            add_window: None,
            min_enrollment,
        }
    }

    /// Whether students may change their plan at `at`.
    pub fn accepts_changes_at(&self, at: Timestamp) -> bool {
        self.registration_window.contains(at) || self.add_window.is_some_and(|w| w.contains(at))
    }

    /// Status a new line receives when committed at `at`.
    pub fn line_status_at(&self, at: Timestamp) -> LineStatus {
        if self.registration_window.contains(at) {
            LineStatus::Planned
        } else {
            LineStatus::Added
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FinancialStatus {
    Clear,
    Hold,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CaseStatus {
    None,
    Hold,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StudentProfile {
    pub nim: Nim,
    pub name: String,
    pub program: String,
    pub financial_status: FinancialStatus,
    pub case_status: CaseStatus,
    pub credit_cap: u32,
    pub over_credit_permit: bool,
}

impl StudentProfile {
    /// A profile in good standing with the default credit cap.
    pub fn new(
        nim: impl Into<Nim>,
        name: impl Into<String>,
        program: impl Into<String>,
    ) -> Result<Self, DomainError> {
        let nim = nim.into();
        if nim.as_str().trim().is_empty() {
            return Err(DomainError::InvalidProfile("nim is empty".into()));
        }
        Ok(Self {
            nim,
            name: name.into(),
            program: program.into(),
            financial_status: FinancialStatus::Clear,
            case_status: CaseStatus::None,
            credit_cap: DEFAULT_CREDIT_CAP,
            over_credit_permit: false,
        })
    }

    pub fn validate(&self) -> Result<(), DomainError> {
        if self.nim.as_str().trim().is_empty() {
            return Err(DomainError::InvalidProfile("nim is empty".into()));
        }
        if self.credit_cap == 0 {
            return Err(DomainError::InvalidProfile(format!(
                "{}: credit cap must be at least 1",
                self.nim
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompletedCourse {
    pub course_code: CourseCode,
    pub passed: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AcademicRecord {
    pub nim: Nim,
    pub completed: Vec<CompletedCourse>,
    pub credits_passed: u32,
    pub credits_total: u32,
    /// Display-only GPA strings; never computed here.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ip: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ipk: Option<String>,
}

impl AcademicRecord {
    pub fn empty(nim: Nim) -> Self {
        Self {
            nim,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), DomainError> {
        if self.credits_passed > self.credits_total {
            return Err(DomainError::InvalidRecord(format!(
                "{}: credits passed {} exceed credits total {}",
                self.nim, self.credits_passed, self.credits_total
            )));
        }
        Ok(())
    }

    /// `Some(passed)` if the course was ever taken; a retake that passed wins.
    pub fn outcome(&self, code: &CourseCode) -> Option<bool> {
        self.completed
            .iter()
            .filter(|c| &c.course_code == code)
            .map(|c| c.passed)
            .reduce(|a, b| a || b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LineStatus {
    Planned,
    Added,
    Withdrawn,
    Cancelled,
}

impl LineStatus {
    pub const ALL: [LineStatus; 4] = [
        LineStatus::Planned,
        LineStatus::Added,
        LineStatus::Withdrawn,
        LineStatus::Cancelled,
    ];

    pub fn is_active(self) -> bool {
        matches!(self, LineStatus::Planned | LineStatus::Added)
    }

    pub fn is_terminal(self) -> bool {
        !self.is_active()
    }
}

impl fmt::Display for LineStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LineStatus::Planned => "Planned",
            LineStatus::Added => "Added",
            LineStatus::Withdrawn => "Withdrawn",
            LineStatus::Cancelled => "Cancelled",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanLine {
    pub section_id: SectionId,
    pub status: LineStatus,
    pub committed_at: Timestamp,
}

/// How identity transitions (`X -> X`) are treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TransitionPolicy {
    pub identity_is_noop: bool,
}

impl Default for TransitionPolicy {
    fn default() -> Self {
        Self {
            identity_is_noop: true,
        }
    }
}

/// Moves a line to `to` using the default policy (identity is a no-op).
pub fn transition_line(line: &PlanLine, to: LineStatus) -> Result<PlanLine, DomainError> {
    transition_line_with(line, to, TransitionPolicy::default())
}

pub fn transition_line_with(
    line: &PlanLine,
    to: LineStatus,
    policy: TransitionPolicy,
) -> Result<PlanLine, DomainError> {
    let from = line.status;
    let allowed = if from == to {
        policy.identity_is_noop
    } else {
        from.is_active() && to.is_terminal()
    };
    if !allowed {
        return Err(DomainError::IllegalTransition { from, to });
    }
    Ok(PlanLine {
        status: to,
        ..line.clone()
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegistrationPlan {
    pub nim: Nim,
    pub term_code: TermCode,
    pub lines: Vec<PlanLine>,
    pub print_count: u32,
}

impl RegistrationPlan {
    pub fn new(nim: Nim, term_code: TermCode) -> Self {
        Self {
            nim,
            term_code,
            lines: Vec::new(),
            print_count: 0,
        }
    }

    pub fn active_lines(&self) -> impl Iterator<Item = &PlanLine> {
        self.lines.iter().filter(|l| l.status.is_active())
    }

    pub fn active_line_mut(&mut self, section_id: &SectionId) -> Option<&mut PlanLine> {
        self.lines
            .iter_mut()
            .find(|l| l.status.is_active() && &l.section_id == section_id)
    }

    pub fn holds_active(&self, section_id: &SectionId) -> bool {
        self.active_lines().any(|l| &l.section_id == section_id)
    }
}

/// Anything that can resolve a section to its course.
pub trait CourseLookup {
    fn course_of_section(&self, section_id: &SectionId) -> Option<&Course>;
}

/// Sum of SKS over `Planned` and `Added` lines.
pub fn active_credits(
    plan: &RegistrationPlan,
    catalog: &impl CourseLookup,
) -> Result<u32, DomainError> {
    plan.lines.iter().try_fold(0u32, |total, line| {
        let course = catalog
            .course_of_section(&line.section_id)
            .ok_or_else(|| DomainError::UnresolvedSection(line.section_id.clone()))?;
        Ok(if line.status.is_active() {
            total + course.credits
        } else {
            total
        })
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ViolationCode {
    WindowClosed,
    PaymentHold,
    CaseHold,
    UnknownSection,
    SectionCancelled,
    DuplicateCourse,
    PrereqUnmet,
    ScheduleConflict,
    CreditCapExceeded,
    SectionFull,
}

impl ViolationCode {
    /// Evaluation order of the add rules.
    pub const ORDER: [ViolationCode; 10] = [
        ViolationCode::WindowClosed,
        ViolationCode::PaymentHold,
        ViolationCode::CaseHold,
        ViolationCode::UnknownSection,
        ViolationCode::SectionCancelled,
        ViolationCode::DuplicateCourse,
        ViolationCode::PrereqUnmet,
        ViolationCode::ScheduleConflict,
        ViolationCode::CreditCapExceeded,
        ViolationCode::SectionFull,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ViolationCode::WindowClosed => "WINDOW_CLOSED",
            ViolationCode::PaymentHold => "PAYMENT_HOLD",
            ViolationCode::CaseHold => "CASE_HOLD",
            ViolationCode::UnknownSection => "UNKNOWN_SECTION",
            ViolationCode::SectionCancelled => "SECTION_CANCELLED",
            ViolationCode::DuplicateCourse => "DUPLICATE_COURSE",
            ViolationCode::PrereqUnmet => "PREREQ_UNMET",
            ViolationCode::ScheduleConflict => "SCHEDULE_CONFLICT",
            ViolationCode::CreditCapExceeded => "CREDIT_CAP_EXCEEDED",
            ViolationCode::SectionFull => "SECTION_FULL",
        }
    }
}

impl fmt::Display for ViolationCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleViolation {
    pub code: ViolationCode,
    pub detail: String,
    pub subject: String,
}

impl RuleViolation {
    pub fn new(code: ViolationCode, subject: impl Into<String>, detail: impl Into<String>) -> Self {
        Self {
            code,
            detail: detail.into(),
            subject: subject.into(),
        }
    }
}
