//! Role matrix.
//!
//! | resource                     | Student | Lecturer        | Staff |
//! |------------------------------|---------|-----------------|-------|
//! | catalog, terms, announcements| read    | read            | all   |
//! | plan of student N            | if N    | no              | all   |
//! | section roster               | no      | own sections    | all   |
//! | demand, decisions, posting   | no      | no              | all   |

use krs_core::Role;

use crate::sessions::Session;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Access<'a> {
    /// Readable by any authenticated principal.
    Public,
    PlanOf(&'a str),
    RosterOf(&'a str),
    Staff,
}

pub fn permits(session: &Session, access: Access<'_>) -> bool {
    match (session.role, access) {
        (Role::Staff, _) => true,
        (_, Access::Public) => true,
        (Role::Student, Access::PlanOf(nim)) => session.principal == nim,
        (Role::Lecturer, Access::RosterOf(lecturer)) => session.principal == lecturer,
        _ => false,
    }
}
