use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{AuditEntry, AuditEvent, StoreError};
use crate::accounts::Account;
use crate::catalog::Catalog;
use crate::domain::{
    AcademicRecord, LineStatus, Nim, PlanLine, RegistrationPlan, SectionId, SectionState,
    StudentProfile, Term, TermCode, Timestamp,
};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Announcement {
    pub id: u64,
    pub posted_at: Timestamp,
    pub author: String,
    pub title: String,
    pub body: String,
}

/// Per-student message written by a cancellation cascade.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Notification {
    pub id: u64,
    pub nim: Nim,
    pub term_code: TermCode,
    pub section_id: SectionId,
    pub at: Timestamp,
    pub message: String,
}

/// Everything except the catalog, in a serializable form.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemState {
    pub terms: BTreeMap<TermCode, Term>,
    pub profiles: BTreeMap<Nim, StudentProfile>,
    pub records: BTreeMap<Nim, AcademicRecord>,
    pub accounts: BTreeMap<String, Account>,
    /// Only sections whose state differs from `Open`.
    pub section_states: BTreeMap<SectionId, SectionState>,
    /// nim -> term -> plan
    pub plans: BTreeMap<Nim, BTreeMap<TermCode, RegistrationPlan>>,
    pub announcements: Vec<Announcement>,
    pub notifications: Vec<Notification>,
}

impl SystemState {
    pub fn plan(&self, nim: &str, term: &str) -> Option<&RegistrationPlan> {
        self.plans.get(nim).and_then(|m| m.get(term))
    }

    fn plan_mut(&mut self, nim: &Nim, term: &TermCode) -> &mut RegistrationPlan {
        self.plans
            .entry(nim.clone())
            .or_default()
            .entry(term.clone())
            .or_insert_with(|| RegistrationPlan::new(nim.clone(), term.clone()))
    }

    pub fn section_state(&self, id: &str) -> SectionState {
        self.section_states.get(id).copied().unwrap_or(SectionState::Open)
    }

    /// Active lines referencing each section.
    pub fn enrolled_counts(&self) -> BTreeMap<SectionId, u32> {
        let mut counts = BTreeMap::new();
        for plan in self.plans.values().flat_map(BTreeMap::values) {
            for line in plan.active_lines() {
                *counts.entry(line.section_id.clone()).or_insert(0) += 1;
            }
        }
        counts
    }

    /// Applies one logged effect without re-running any rule.
    pub fn apply(&mut self, catalog: &Catalog, entry: &AuditEntry) -> Result<(), StoreError> {
        let fail = |reason: String| StoreError::Replay {
            seq: entry.seq,
            reason,
        };
        match &entry.event {
            AuditEvent::AddCommitted {
                nim,
                term_code,
                section_id,
                status,
            } => {
                if catalog.section(section_id.as_str()).is_none() {
                    return Err(fail(format!("unknown section {section_id}")));
                }
                self.plan_mut(nim, term_code).lines.push(PlanLine {
                    section_id: section_id.clone(),
                    status: *status,
                    committed_at: entry.at,
                });
            }
            AuditEvent::Withdrawn {
                nim,
                term_code,
                section_id,
            } => {
                let line = self
                    .plan_mut(nim, term_code)
                    .active_line_mut(section_id)
                    .ok_or_else(|| fail(format!("{nim} holds no active line for {section_id}")))?;
                line.status = LineStatus::Withdrawn;
            }
            AuditEvent::SectionCancelled {
                section_id,
                affected,
                announcement,
                notifications,
            } => {
                let term = catalog
                    .section(section_id.as_str())
                    .map(|s| s.term_code.clone())
                    .ok_or_else(|| fail(format!("unknown section {section_id}")))?;
                self.section_states.insert(section_id.clone(), SectionState::Cancelled);
                for nim in affected {
                    let line = self
                        .plan_mut(nim, &term)
                        .active_line_mut(section_id)
                        .ok_or_else(|| fail(format!("{nim} holds no active line for {section_id}")))?;
                    line.status = LineStatus::Cancelled;
                }
                self.announcements.push(announcement.clone());
                self.notifications.extend(notifications.iter().cloned());
            }
            AuditEvent::SectionConfirmed { section_id } => {
                self.section_states.insert(section_id.clone(), SectionState::Confirmed);
            }
            AuditEvent::PlanPrinted {
                nim,
                term_code,
                print_count,
            } => {
                self.plan_mut(nim, term_code).print_count = *print_count;
            }
            AuditEvent::ProfileChanged { profile } => {
                self.profiles.insert(profile.nim.clone(), profile.clone());
            }
            AuditEvent::AnnouncementPosted { announcement } => {
                self.announcements.push(announcement.clone());
            }
            AuditEvent::SessionOpened { .. } => {}
        }
        Ok(())
    }
}
