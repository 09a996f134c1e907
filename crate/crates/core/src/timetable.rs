//! Timetable clash detection between a candidate section and a plan.

use serde::{Deserialize, Serialize};

use crate::domain::{MeetingTime, Section, SectionId};

/// Half-open overlap on the same weekday; touching endpoints do not clash.
pub fn meetings_overlap(a: &MeetingTime, b: &MeetingTime) -> bool {
    a.day() == b.day() && a.start() < b.end() && b.start() < a.end()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Conflict {
    /// The already-held section the candidate clashes with.
    pub section_id: SectionId,
    /// Meeting of the held section.
    pub existing: MeetingTime,
    /// Meeting of the candidate.
    pub candidate: MeetingTime,
}

/// Every overlapping meeting pair between `candidate` and `active`, ordered by
/// active section id, then day, then start of the held meeting.
pub fn section_conflicts<'a, I>(candidate: &Section, active: I) -> Vec<Conflict>
where
    I: IntoIterator<Item = &'a Section>,
{
    let mut out: Vec<Conflict> = active
        .into_iter()
        .flat_map(|held| {
            held.meetings.iter().flat_map(move |existing| {
                candidate
                    .meetings
                    .iter()
                    .filter(move |c| meetings_overlap(existing, c))
                    .map(move |c| Conflict {
                        section_id: held.section_id.clone(),
                        existing: *existing,
                        candidate: *c,
                    })
            })
        })
        .collect();
    out.sort_by(|a, b| {
        (&a.section_id, a.existing.day(), a.existing.start(), a.existing.end(), a.candidate)
            .cmp(&(&b.section_id, b.existing.day(), b.existing.start(), b.existing.end(), b.candidate))
    });
    out
}
