//! Durable state: snapshot plus append-only audit log, replay, and the KRS
//! document renderer.
//!
//! A state directory looks like:
//!
//! ```text
//! <dir>/snapshot.json      JSON: {"format":1,"seq":N,"state":{...}}
//! <dir>/audit.log          one JSON AuditEntry per line, seq 1,2,3,...
//! <dir>/catalog/courses.csv
//! <dir>/catalog/sections.csv
//! <dir>/krs.lock           held exclusively by the process that owns the directory
//! ```
//!
//! Loading reads the snapshot and replays every log entry with a larger seq.

mod document;
mod file;
mod memory;
mod state;

pub use document::{format_timestamp, render_document, KrsDocument};
pub use file::FileStore;
pub use memory::MemoryStore;
pub use state::{Announcement, Notification, SystemState};

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::accounts::Role;
use crate::catalog::{Catalog, CatalogError};
use crate::domain::{LineStatus, Nim, SectionId, StudentProfile, TermCode, Timestamp};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "action", content = "payload")]
pub enum AuditEvent {
    AddCommitted {
        nim: Nim,
        term_code: TermCode,
        section_id: SectionId,
        status: LineStatus,
    },
    Withdrawn {
        nim: Nim,
        term_code: TermCode,
        section_id: SectionId,
    },
    SectionCancelled {
        section_id: SectionId,
        affected: Vec<Nim>,
        announcement: Announcement,
        notifications: Vec<Notification>,
    },
    SectionConfirmed {
        section_id: SectionId,
    },
    PlanPrinted {
        nim: Nim,
        term_code: TermCode,
        print_count: u32,
    },
    ProfileChanged {
        profile: StudentProfile,
    },
    AnnouncementPosted {
        announcement: Announcement,
    },
    SessionOpened {
        principal: String,
        role: Role,
    },
}

impl AuditEvent {
    pub fn action(&self) -> &'static str {
        match self {
            AuditEvent::AddCommitted { .. } => "AddCommitted",
            AuditEvent::Withdrawn { .. } => "Withdrawn",
            AuditEvent::SectionCancelled { .. } => "SectionCancelled",
            AuditEvent::SectionConfirmed { .. } => "SectionConfirmed",
            AuditEvent::PlanPrinted { .. } => "PlanPrinted",
            AuditEvent::ProfileChanged { .. } => "ProfileChanged",
            AuditEvent::AnnouncementPosted { .. } => "AnnouncementPosted",
            AuditEvent::SessionOpened { .. } => "SessionOpened",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub seq: u64,
    pub at: Timestamp,
    pub actor: String,
    #[serde(flatten)]
    pub event: AuditEvent,
}

/// Full system state at a given log position.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Snapshot {
    pub seq: u64,
    pub catalog: Catalog,
    pub state: SystemState,
}

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("IO_ERROR: {0}")]
    Io(#[from] std::io::Error),
    #[error("CORRUPT_SNAPSHOT: {0}")]
    CorruptSnapshot(String),
    #[error("CORRUPT_LOG: line {line}: {reason}")]
    CorruptLog { line: usize, reason: String },
    #[error("GAP_IN_LOG: missing seq {0}")]
    GapInLog(u64),
    #[error("replay of seq {seq} failed: {reason}")]
    Replay { seq: u64, reason: String },
    #[error("state directory {0} is locked by another process")]
    Locked(String),
}

impl StoreError {
    pub fn code(&self) -> &'static str {
        match self {
            StoreError::Io(_) => "IO_ERROR",
            StoreError::CorruptSnapshot(_) => "CORRUPT_SNAPSHOT",
            StoreError::CorruptLog { .. } => "CORRUPT_LOG",
            StoreError::GapInLog(_) => "GAP_IN_LOG",
            StoreError::Replay { .. } => "REPLAY_FAILED",
            StoreError::Locked(_) => "LOCKED",
        }
    }
}

impl From<Vec<CatalogError>> for StoreError {
    fn from(errors: Vec<CatalogError>) -> Self {
        StoreError::CorruptSnapshot(
            errors
                .iter()
                .map(ToString::to_string)
                .collect::<Vec<_>>()
                .join("; "),
        )
    }
}

/// Persistence backend. Appends must be durable before `append` returns.
pub trait Store: Send + Sync {
    /// Last saved snapshot and the complete audit log, unreplayed.
    fn load_raw(&self) -> Result<(Snapshot, Vec<AuditEntry>), StoreError>;
    fn append(&self, entry: &AuditEntry) -> Result<(), StoreError>;
    fn save_snapshot(&self, snapshot: &Snapshot) -> Result<(), StoreError>;
    fn entries(&self) -> Result<Vec<AuditEntry>, StoreError>;
}

/// Checks log continuity and applies every entry after the snapshot.
pub fn replay(mut snapshot: Snapshot, entries: &[AuditEntry]) -> Result<Snapshot, StoreError> {
    for (i, e) in entries.iter().enumerate() {
        let expected = i as u64 + 1;
        if e.seq != expected {
            return Err(StoreError::GapInLog(expected));
        }
    }
    let last = entries.last().map_or(0, |e| e.seq);
    if last < snapshot.seq {
        return Err(StoreError::GapInLog(last + 1));
    }
    for e in entries.iter().filter(|e| e.seq > snapshot.seq) {
        snapshot.state.apply(&snapshot.catalog, e)?;
    }
    snapshot.seq = last;
    Ok(snapshot)
}

/// Reconstructs the state stored in `dir`.
pub fn load_state(dir: impl AsRef<Path>) -> Result<Snapshot, StoreError> {
    let store = FileStore::open(dir)?;
    let (snapshot, entries) = store.load_raw()?;
    replay(snapshot, &entries)
}
