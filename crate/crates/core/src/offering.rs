//! Staff-side demand reporting and the confirm/cancel decision per section.

use serde::{Deserialize, Serialize};

use crate::domain::{CourseCode, LineStatus, Nim, Section, SectionId, SectionState, Timestamp};
use crate::engine::{Engine, EngineError};
use crate::store::{Announcement, AuditEvent, Notification};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemandRow {
    pub course_code: CourseCode,
    pub section_id: SectionId,
    pub class_label: String,
    pub enrolled: u32,
    pub capacity: u32,
    pub fill_ratio: f64,
    /// `enrolled < min_enrollment` (strict).
    pub below_threshold: bool,
    pub state: SectionState,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Confirm,
    Cancel,
}

impl std::str::FromStr for Decision {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "confirm" => Ok(Decision::Confirm),
            "cancel" => Ok(Decision::Cancel),
            other => Err(format!("unknown decision {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecisionOutcome {
    pub section_id: SectionId,
    pub state: SectionState,
    /// Students whose line was cancelled, in nim order.
    pub affected: Vec<Nim>,
    pub notifications: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub announcement_id: Option<u64>,
}

/// What a student affected by a cancellation can do next.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplacementWindow {
    pub section_id: SectionId,
    /// Adds stay possible until this instant.
    pub open_until: Timestamp,
    /// Other non-cancelled sections of the same course in the same term.
    pub alternatives: Vec<SectionId>,
}

impl Engine {
    /// One row per non-cancelled section in the term, ordered by course code
    /// then class label.
    pub fn demand_report(&self, term_code: &str) -> Result<Vec<DemandRow>, EngineError> {
        let inner = self.read();
        let term = inner
            .terms
            .get(term_code)
            .ok_or_else(|| EngineError::UnknownTerm(term_code.to_owned()))?;
        let mut rows: Vec<DemandRow> = inner
            .catalog
            .term_sections(term_code)
            .filter_map(|s| {
                let seats = inner.seat_status(&s.section_id)?;
                (seats.state != SectionState::Cancelled).then(|| DemandRow {
                    course_code: s.course_code.clone(),
                    section_id: s.section_id.clone(),
                    class_label: s.class_label.clone(),
                    enrolled: seats.enrolled,
                    capacity: seats.capacity,
                    fill_ratio: f64::from(seats.enrolled) / f64::from(seats.capacity),
                    below_threshold: seats.enrolled < term.min_enrollment,
                    state: seats.state,
                })
            })
            .collect();
        rows.sort_by(|a, b| {
            (&a.course_code, &a.class_label, &a.section_id).cmp(&(&b.course_code, &b.class_label, &b.section_id))
        });
        Ok(rows)
    }

    /// Confirms or cancels an `Open` section. Cancelling cascades in one
    /// atomic step: every active line becomes `Cancelled`, one announcement
    /// is posted and each affected student gets a notification.
    pub fn decide_section(
        &self,
        section_id: &str,
        decision: Decision,
        actor: &str,
        at: Timestamp,
    ) -> Result<DecisionOutcome, EngineError> {
        let inner = self.write();
        let section: Section = inner
            .catalog
            .section(section_id)
            .cloned()
            .ok_or_else(|| EngineError::UnknownSection(section_id.to_owned()))?;
        let slot = inner.slot(&section.section_id).expect("slot per catalog section");
        let mut slot = slot.lock();
        if slot.state != SectionState::Open {
            return Err(EngineError::AlreadyDecided {
                section_id: section.section_id,
                state: slot.state,
            });
        }

        if decision == Decision::Confirm {
            self.append_audit(
                actor,
                at,
                AuditEvent::SectionConfirmed {
                    section_id: section.section_id.clone(),
                },
            )?;
            slot.state = SectionState::Confirmed;
            return Ok(DecisionOutcome {
                section_id: section.section_id,
                state: SectionState::Confirmed,
                affected: Vec::new(),
                notifications: 0,
                announcement_id: None,
            });
        }

        let affected_plans: Vec<_> = inner
            .plan_handles()
            .into_iter()
            .filter(|(k, h)| k.term_code == section.term_code && h.lock().holds_active(&section.section_id))
            .collect();
        let affected: Vec<Nim> = affected_plans.iter().map(|(k, _)| k.nim.clone()).collect();

        let mut announcements = inner.announcements.lock();
        let mut notifications = inner.notifications.lock();
        let course = inner.catalog.course(section.course_code.as_str());
        let course_name = course.map_or_else(|| section.course_code.to_string(), |c| format!("{} {}", c.code, c.title));
        let announcement = Announcement {
            id: announcements.last().map_or(0, |a| a.id) + 1,
            posted_at: at,
            author: actor.to_owned(),
            title: format!("Kelas {} {} dibatalkan", section.course_code, section.class_label),
            body: format!(
                "Matakuliah {course_name} kelas {} ({}) tidak jadi diselenggarakan untuk periode {}.",
                section.class_label, section.section_id, section.term_code
            ),
        };
        let first_id = notifications.last().map_or(0, |n| n.id) + 1;
        let new_notes: Vec<Notification> = affected
            .iter()
            .zip(first_id..)
            .map(|(nim, id)| Notification {
                id,
                nim: nim.clone(),
                term_code: section.term_code.clone(),
                section_id: section.section_id.clone(),
                at,
                message: format!(
                    "Kelas {} {} dibatalkan; silakan pilih matakuliah pengganti selama masa KRS.",
                    section.course_code, section.class_label
                ),
            })
            .collect();

        self.append_audit(
            actor,
            at,
            AuditEvent::SectionCancelled {
                section_id: section.section_id.clone(),
                affected: affected.clone(),
                announcement: announcement.clone(),
                notifications: new_notes.clone(),
            },
        )?;

        for (_, handle) in &affected_plans {
            let mut plan = handle.lock();
            if let Some(line) = plan.active_line_mut(&section.section_id) {
                line.status = LineStatus::Cancelled;
            }
        }
        slot.state = SectionState::Cancelled;
        slot.enrolled -= affected.len() as u32;
        let announcement_id = announcement.id;
        announcements.push(announcement);
        let count = new_notes.len();
        notifications.extend(new_notes);

        Ok(DecisionOutcome {
            section_id: section.section_id,
            state: SectionState::Cancelled,
            affected,
            notifications: count,
            announcement_id: Some(announcement_id),
        })
    }

    /// Replacement options after a cancellation. Adds to the cancelled section
    /// itself are refused by the rules with `SECTION_CANCELLED`.
    pub fn post_cancel_add_window(&self, section_id: &str) -> Result<ReplacementWindow, EngineError> {
        let inner = self.read();
        let section = inner
            .catalog
            .section(section_id)
            .ok_or_else(|| EngineError::UnknownSection(section_id.to_owned()))?;
        let term = inner
            .terms
            .get(&section.term_code)
            .ok_or_else(|| EngineError::UnknownTerm(section.term_code.to_string()))?;
        let open_until = term
            .add_window
            .map_or(term.registration_window.close_at, |w| w.close_at.max(term.registration_window.close_at));
        let alternatives = inner
            .catalog
            .sections_of(term, section.course_code.as_str())
            .map_err(|e| EngineError::Catalog(vec![e]))?
            .into_iter()
            .filter(|s| s.section_id != section.section_id)
            .filter(|s| inner.seat_status(&s.section_id).is_some_and(|st| st.state != SectionState::Cancelled))
            .map(|s| s.section_id.clone())
            .collect();
        Ok(ReplacementWindow {
            section_id: section.section_id.clone(),
            open_until,
            alternatives,
        })
    }
}
