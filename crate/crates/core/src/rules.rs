//! Registration rules: pure validation of add requests, plus the atomic
//! commit operations on [`Engine`].

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::catalog::Catalog;
use crate::domain::{
    AcademicRecord, CaseStatus, Course, CourseCode, FinancialStatus, Nim, PlanLine,
    RegistrationPlan, RuleViolation, Section, SectionId, SectionState, StudentProfile, Term,
    TermCode, Timestamp, ViolationCode,
};
use crate::engine::{Engine, EngineError, PlanKey};
use crate::store::AuditEvent;
use crate::timetable::section_conflicts;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AddRequest {
    pub nim: Nim,
    pub term_code: TermCode,
    pub section_id: SectionId,
    pub requested_at: Timestamp,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub accepted: bool,
    pub violations: Vec<RuleViolation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub committed_line: Option<PlanLine>,
}

impl Verdict {
    pub fn rejected(violations: Vec<RuleViolation>) -> Self {
        debug_assert!(!violations.is_empty());
        Self {
            accepted: false,
            violations,
            committed_line: None,
        }
    }

    fn accepted(line: PlanLine) -> Self {
        Self {
            accepted: true,
            violations: Vec::new(),
            committed_line: Some(line),
        }
    }

    pub fn codes(&self) -> Vec<ViolationCode> {
        self.violations.iter().map(|v| v.code).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RulesPolicy {
    /// Prerequisites must have been passed, not merely taken.
    pub require_pass: bool,
}

impl Default for RulesPolicy {
    fn default() -> Self {
        Self { require_pass: true }
    }
}

/// Live occupancy of one section.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeatStatus {
    pub state: SectionState,
    pub enrolled: u32,
    pub capacity: u32,
}

impl SeatStatus {
    pub fn free(&self) -> u32 {
        self.capacity.saturating_sub(self.enrolled)
    }
}

/// A consistent snapshot of everything an add decision depends on.
#[derive(Debug, Clone, Copy)]
pub struct RegistrationContext<'a> {
    pub catalog: &'a Catalog,
    pub term: &'a Term,
    pub profile: &'a StudentProfile,
    pub record: &'a AcademicRecord,
    pub plan: &'a RegistrationPlan,
    /// Occupancy of the requested section, if it exists.
    pub seats: Option<SeatStatus>,
    pub policy: RulesPolicy,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrereqCheck {
    pub satisfied: bool,
    pub missing: BTreeSet<CourseCode>,
}

/// Checks direct prerequisites of `course` against the record.
pub fn prereq_satisfied(record: &AcademicRecord, course: &Course, require_pass: bool) -> PrereqCheck {
    let missing: BTreeSet<CourseCode> = course
        .prerequisites
        .iter()
        .filter(|p| match record.outcome(p) {
            None => true,
            Some(passed) => require_pass && !passed,
        })
        .cloned()
        .collect();
    PrereqCheck {
        satisfied: missing.is_empty(),
        missing,
    }
}

fn join<I: IntoIterator<Item = S>, S: ToString>(items: I) -> String {
    items.into_iter().map(|s| s.to_string()).collect::<Vec<_>>().join(", ")
}

/// Evaluates every add rule in the fixed order and reports all violations.
///
/// A request outside the term's change windows is rejected with
/// `WINDOW_CLOSED` alone. Rules that need the section are skipped when the
/// section is unknown.
pub fn validate_add(req: &AddRequest, ctx: &RegistrationContext<'_>) -> Vec<RuleViolation> {
    let sid = req.section_id.as_str();
    let term = ctx.term;
    if !term.accepts_changes_at(req.requested_at) {
        return vec![RuleViolation::new(
            ViolationCode::WindowClosed,
            sid,
            format!(
                "registration for term {} is open {} to {}",
                term.term_code, term.registration_window.open_at, term.registration_window.close_at
            ),
        )];
    }

    let mut out = Vec::new();
    let profile = ctx.profile;
    if profile.financial_status == FinancialStatus::Hold && req.requested_at >= term.payment_window.open_at {
        out.push(RuleViolation::new(
            ViolationCode::PaymentHold,
            sid,
            format!("student {} has an outstanding financial hold", profile.nim),
        ));
    }
    if profile.case_status == CaseStatus::Hold {
        out.push(RuleViolation::new(
            ViolationCode::CaseHold,
            sid,
            format!("student {} has an open case", profile.nim),
        ));
    }

    let resolved = ctx
        .catalog
        .section(sid)
        .filter(|s| s.term_code == req.term_code)
        .and_then(|s| ctx.catalog.course(s.course_code.as_str()).map(|c| (s, c)));
    let Some((section, course)) = resolved else {
        out.push(RuleViolation::new(
            ViolationCode::UnknownSection,
            sid,
            format!("section {sid} is not offered in term {}", req.term_code),
        ));
        return out;
    };
    let seats = ctx.seats.unwrap_or(SeatStatus {
        state: section.state,
        enrolled: 0,
        capacity: section.capacity,
    });

    if seats.state == SectionState::Cancelled {
        out.push(RuleViolation::new(
            ViolationCode::SectionCancelled,
            sid,
            format!("{} class {} has been cancelled", course.code, section.class_label),
        ));
    }

    // Active sections of the plan, excluding other sections of the same course:
    // those are already reported as a duplicate and the add would replace nothing.
    let mut held: Vec<&Section> = Vec::new();
    let mut same_course: Vec<&Section> = Vec::new();
    let mut other_credits = 0u32;
    for line in ctx.plan.active_lines() {
        let Some(s) = ctx.catalog.section(line.section_id.as_str()) else {
            continue;
        };
        if s.course_code == course.code {
            same_course.push(s);
        } else {
            held.push(s);
            other_credits += ctx.catalog.course(s.course_code.as_str()).map_or(0, |c| c.credits);
        }
    }

    if !same_course.is_empty() {
        out.push(RuleViolation::new(
            ViolationCode::DuplicateCourse,
            course.code.as_str(),
            format!(
                "{} is already in the plan as section {}",
                course.code,
                join(same_course.iter().map(|s| &s.section_id))
            ),
        ));
    }

    let prereq = prereq_satisfied(ctx.record, course, ctx.policy.require_pass);
    if !prereq.satisfied {
        out.push(RuleViolation::new(
            ViolationCode::PrereqUnmet,
            course.code.as_str(),
            format!("missing prerequisites: {}", join(&prereq.missing)),
        ));
    }

    let conflicts = section_conflicts(section, held.iter().copied());
    if !conflicts.is_empty() {
        out.push(RuleViolation::new(
            ViolationCode::ScheduleConflict,
            sid,
            format!(
                "clashes with {}",
                join(conflicts.iter().map(|c| format!("{} {} (vs {})", c.section_id, c.existing, c.candidate)))
            ),
        ));
    }

    let total = other_credits + course.credits;
    if total > profile.credit_cap && !profile.over_credit_permit {
        out.push(RuleViolation::new(
            ViolationCode::CreditCapExceeded,
            course.code.as_str(),
            format!(
                "{} SKS would bring the plan to {total} SKS, above the {} SKS cap",
                course.credits, profile.credit_cap
            ),
        ));
    }

    let already_seated = ctx.plan.holds_active(&section.section_id);
    if !already_seated && seats.enrolled >= seats.capacity {
        out.push(RuleViolation::new(
            ViolationCode::SectionFull,
            sid,
            format!("all {} seats are taken", seats.capacity),
        ));
    }
    out
}

impl Engine {
    /// Validates `req` against the current state without side effects.
    pub fn validate_add(&self, req: &AddRequest) -> Verdict {
        let inner = self.read();
        let key = PlanKey::new(req.nim.clone(), req.term_code.clone());
        let plan = inner
            .plan_handle(&key)
            .map(|p| p.lock().clone())
            .unwrap_or_else(|| RegistrationPlan::new(req.nim.clone(), req.term_code.clone()));
        let seats = inner.seat_status(&req.section_id);
        match inner.context_violations(req, &plan, seats, self.policy()) {
            Ok(violations) if violations.is_empty() => Verdict {
                accepted: true,
                violations,
                committed_line: None,
            },
            Ok(violations) => Verdict::rejected(violations),
            Err(v) => Verdict::rejected(vec![v]),
        }
    }

    /// Re-validates and, if accepted, takes a seat and appends the line in one
    /// step. The actor recorded in the audit log is the student.
    pub fn commit_add(&self, req: &AddRequest) -> Result<Verdict, EngineError> {
        self.commit_add_by(req, req.nim.as_str())
    }

    pub fn commit_add_by(&self, req: &AddRequest, actor: &str) -> Result<Verdict, EngineError> {
        let inner = self.read();
        let key = PlanKey::new(req.nim.clone(), req.term_code.clone());
        // Lock order: plan, then section slot, then audit log.
        let handle = inner.plan_handle_or_create(&key);
        let mut plan = handle.lock();
        let slot = inner.slot(&req.section_id);
        let mut slot_guard = slot.map(|s| s.lock());
        let seats = slot_guard.as_deref().map(|s| s.status());

        let violations = match inner.context_violations(req, &plan, seats, self.policy()) {
            Ok(v) => v,
            Err(v) => vec![v],
        };
        if !violations.is_empty() {
            return Ok(Verdict::rejected(violations));
        }
        let (Some(term), Some(slot)) = (inner.term(&req.term_code), slot_guard.as_deref_mut()) else {
            unreachable!("validation resolved term and section");
        };
        let line = PlanLine {
            section_id: req.section_id.clone(),
            status: term.line_status_at(req.requested_at),
            committed_at: req.requested_at,
        };
        self.append_audit(
            actor,
            req.requested_at,
            AuditEvent::AddCommitted {
                nim: req.nim.clone(),
                term_code: req.term_code.clone(),
                section_id: req.section_id.clone(),
                status: line.status,
            },
        )?;
        slot.enrolled += 1;
        plan.lines.push(line.clone());
        Ok(Verdict::accepted(line))
    }

    /// Withdraws the active line for `section_id`, returning its seat.
    pub fn commit_withdraw(
        &self,
        nim: &Nim,
        term_code: &TermCode,
        section_id: &SectionId,
        at: Timestamp,
    ) -> Result<Verdict, EngineError> {
        self.commit_withdraw_by(nim, term_code, section_id, at, nim.as_str())
    }

    pub fn commit_withdraw_by(
        &self,
        nim: &Nim,
        term_code: &TermCode,
        section_id: &SectionId,
        at: Timestamp,
        actor: &str,
    ) -> Result<Verdict, EngineError> {
        let inner = self.read();
        let key = PlanKey::new(nim.clone(), term_code.clone());
        let unknown = || {
            Verdict::rejected(vec![RuleViolation::new(
                ViolationCode::UnknownSection,
                section_id.as_str(),
                format!("no active line for section {section_id} in {nim}'s {term_code} plan"),
            )])
        };
        let Some(term) = inner.term(term_code) else {
            return Ok(unknown());
        };
        if !term.accepts_changes_at(at) {
            return Ok(Verdict::rejected(vec![RuleViolation::new(
                ViolationCode::WindowClosed,
                section_id.as_str(),
                format!("changes to term {term_code} closed at {}", term.registration_window.close_at),
            )]));
        }
        let Some(handle) = inner.plan_handle(&key) else {
            return Ok(unknown());
        };
        let mut plan = handle.lock();
        if !plan.holds_active(section_id) {
            return Ok(unknown());
        }
        let Some(slot) = inner.slot(section_id) else {
            return Ok(unknown());
        };
        let mut slot = slot.lock();
        self.append_audit(
            actor,
            at,
            AuditEvent::Withdrawn {
                nim: nim.clone(),
                term_code: term_code.clone(),
                section_id: section_id.clone(),
            },
        )?;
        let line = plan.active_line_mut(section_id).expect("checked above");
        line.status = crate::domain::LineStatus::Withdrawn;
        let line = line.clone();
        slot.enrolled -= 1;
        Ok(Verdict::accepted(line))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{CompletedCourse, LineStatus, MeetingTime, Window};

    fn ts(s: &str) -> Timestamp {
        s.parse().unwrap()
    }

    fn course(code: &str, credits: u32, prereqs: &[&str]) -> Course {
        Course::new(code, format!("Course {code}"), credits, prereqs.iter().map(|p| CourseCode::from(*p))).unwrap()
    }

    fn section(id: &str, course: &str, meetings: &[&str]) -> Section {
        Section::new(
            id,
            course,
            "01",
            TermCode::parse("20072").unwrap(),
            30,
            meetings.iter().map(|m| m.parse::<MeetingTime>().unwrap()).collect(),
            "lect",
        )
        .unwrap()
    }

    fn term() -> Term {
        Term::new(
            TermCode::parse("20072").unwrap(),
            Window::new(ts("2008-02-01T00:00:00Z"), ts("2008-02-29T00:00:00Z")).unwrap(),
            Window::new(ts("2008-02-10T00:00:00Z"), ts("2008-03-15T00:00:00Z")).unwrap(),
            10,
        )
    }

    /// Student holding 23 SKS: 12 + 6 + 5 in three non-clashing sections.
    struct Fixture {
        catalog: Catalog,
        term: Term,
        profile: StudentProfile,
        record: AcademicRecord,
        plan: RegistrationPlan,
    }

    fn fixture() -> Fixture {
        let catalog = Catalog::from_parts(
            [
                course("H1", 12, &[]),
                course("H2", 6, &[]),
                course("H3", 5, &[]),
                course("B", 3, &[]),
                course("N", 2, &["B"]),
                course("F", 2, &[]),
            ],
            [
                section("s-h1", "H1", &["MON 07:00-09:00"]),
                section("s-h2", "H2", &["TUE 07:00-09:00"]),
                section("s-h3", "H3", &["WED 07:00-09:00"]),
                section("s-n", "N", &["MON 08:00-10:00"]),
                section("s-f", "F", &["FRI 07:00-09:00"]),
            ],
        )
        .unwrap();
        let nim = Nim::from("13205012");
        let mut plan = RegistrationPlan::new(nim.clone(), TermCode::parse("20072").unwrap());
        for s in ["s-h1", "s-h2", "s-h3"] {
            plan.lines.push(PlanLine {
                section_id: s.into(),
                status: LineStatus::Planned,
                committed_at: ts("2008-02-02T00:00:00Z"),
            });
        }
        Fixture {
            catalog,
            term: term(),
            profile: StudentProfile::new(nim.clone(), "Dian", "Teknik Elektro").unwrap(),
            record: AcademicRecord::empty(nim),
            plan,
        }
    }

    fn ctx(f: &Fixture) -> RegistrationContext<'_> {
        RegistrationContext {
            catalog: &f.catalog,
            term: &f.term,
            profile: &f.profile,
            record: &f.record,
            plan: &f.plan,
            seats: None,
            policy: RulesPolicy::default(),
        }
    }

    fn req(section: &str, at: &str) -> AddRequest {
        AddRequest {
            nim: "13205012".into(),
            term_code: TermCode::parse("20072").unwrap(),
            section_id: section.into(),
            requested_at: ts(at),
        }
    }

    fn codes(v: &[RuleViolation]) -> Vec<ViolationCode> {
        v.iter().map(|v| v.code).collect()
    }

    #[test]
    fn combined_violations_in_order() {
        let f = fixture();
        let got = validate_add(&req("s-n", "2008-02-05T00:00:00Z"), &ctx(&f));
        assert_eq!(
            codes(&got),
            [
                ViolationCode::PrereqUnmet,
                ViolationCode::ScheduleConflict,
                ViolationCode::CreditCapExceeded
            ]
        );
        assert!(got[0].detail.contains('B'));
        assert!(got[1].detail.contains("s-h1"));
    }

    #[test]
    fn window_closed_masks_everything() {
        let mut f = fixture();
        f.profile.financial_status = FinancialStatus::Hold;
        f.profile.case_status = CaseStatus::Hold;
        let got = validate_add(&req("nope", "2008-03-01T00:00:00Z"), &ctx(&f));
        assert_eq!(codes(&got), [ViolationCode::WindowClosed]);
    }

    #[test]
    fn holds_and_unknown_section() {
        let mut f = fixture();
        f.profile.financial_status = FinancialStatus::Hold;
        f.profile.case_status = CaseStatus::Hold;
        let got = validate_add(&req("nope", "2008-02-12T00:00:00Z"), &ctx(&f));
        assert_eq!(
            codes(&got),
            [ViolationCode::PaymentHold, ViolationCode::CaseHold, ViolationCode::UnknownSection]
        );
        // Before the payment window opens a financial hold does not block.
        let got = validate_add(&req("nope", "2008-02-05T00:00:00Z"), &ctx(&f));
        assert_eq!(codes(&got), [ViolationCode::CaseHold, ViolationCode::UnknownSection]);
    }

    #[test]
    fn over_credit_permit_bypasses_cap() {
        let mut f = fixture();
        f.profile.over_credit_permit = true;
        assert!(validate_add(&req("s-f", "2008-02-05T00:00:00Z"), &ctx(&f)).is_empty());
        f.profile.over_credit_permit = false;
        assert_eq!(
            codes(&validate_add(&req("s-f", "2008-02-05T00:00:00Z"), &ctx(&f))),
            [ViolationCode::CreditCapExceeded]
        );
    }

    #[test]
    fn duplicate_course_only_for_resubmission() {
        let f = fixture();
        let got = validate_add(&req("s-h2", "2008-02-05T00:00:00Z"), &ctx(&f));
        assert_eq!(codes(&got), [ViolationCode::DuplicateCourse]);
    }

    #[test]
    fn full_and_cancelled_sections() {
        let mut f = fixture();
        f.plan.lines.clear();
        let mut c = ctx(&f);
        c.seats = Some(SeatStatus { state: SectionState::Cancelled, enrolled: 30, capacity: 30 });
        assert_eq!(
            codes(&validate_add(&req("s-f", "2008-02-05T00:00:00Z"), &c)),
            [ViolationCode::SectionCancelled, ViolationCode::SectionFull]
        );
        c.seats = Some(SeatStatus { state: SectionState::Open, enrolled: 29, capacity: 30 });
        assert!(validate_add(&req("s-f", "2008-02-05T00:00:00Z"), &c).is_empty());
    }

    #[test]
    fn section_from_other_term_is_unknown() {
        let f = fixture();
        let mut r = req("s-f", "2008-02-05T00:00:00Z");
        r.term_code = TermCode::parse("20081").unwrap();
        assert_eq!(codes(&validate_add(&r, &ctx(&f))), [ViolationCode::UnknownSection]);
    }

    #[test]
    fn prereq_truth_table() {
        let b_only = course("N", 2, &["B"]);
        let nim = Nim::from("1");
        let failed_b = AcademicRecord {
            completed: vec![CompletedCourse { course_code: "B".into(), passed: false }],
            ..AcademicRecord::empty(nim.clone())
        };
        let passed_b = AcademicRecord {
            completed: vec![CompletedCourse { course_code: "B".into(), passed: true }],
            ..AcademicRecord::empty(nim.clone())
        };
        let empty = AcademicRecord::empty(nim);
        let set = |c: &[&str]| c.iter().map(|s| CourseCode::from(*s)).collect::<BTreeSet<_>>();
        // (record, require_pass) -> missing
        let table: [(&AcademicRecord, bool, BTreeSet<CourseCode>); 6] = [
            (&empty, true, set(&["B"])),
            (&empty, false, set(&["B"])),
            (&failed_b, true, set(&["B"])),
            (&failed_b, false, set(&[])),
            (&passed_b, true, set(&[])),
            (&passed_b, false, set(&[])),
        ];
        for (rec, require_pass, missing) in table {
            let got = prereq_satisfied(rec, &b_only, require_pass);
            assert_eq!(got.satisfied, missing.is_empty());
            assert_eq!(got.missing, missing);
        }
        let none = course("Z", 2, &[]);
        assert!(prereq_satisfied(&empty, &none, true).satisfied);
        let two = course("Y", 2, &["B", "C"]);
        assert_eq!(prereq_satisfied(&passed_b, &two, true).missing, set(&["C"]));
    }

    #[test]
    fn validation_is_deterministic() {
        let f = fixture();
        let a = validate_add(&req("s-n", "2008-02-05T00:00:00Z"), &ctx(&f));
        let b = validate_add(&req("s-n", "2008-02-05T00:00:00Z"), &ctx(&f));
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }
}
