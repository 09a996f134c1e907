//! Online course registration (KRS) engine.
//!
//! * [`domain`]: entities and invariants
//! * [`catalog`]: course catalog import and the prerequisite graph
//! * [`timetable`]: meeting clash detection
//! * [`rules`]: add/withdraw validation and atomic commits
//! * [`offering`]: demand reporting and section cancellation cascade
//! * [`store`]: snapshot + audit log persistence and KRS documents

pub mod accounts;
pub mod catalog;
pub mod domain;
pub mod engine;
pub mod offering;
pub mod people;
pub mod rules;
pub mod store;
pub mod timetable;

pub use accounts::{Account, Role};
pub use catalog::{import_catalog, Catalog, CatalogError};
pub use domain::*;
pub use engine::{Engine, EngineConfig, EngineError, PlanKey};
pub use offering::{Decision, DecisionOutcome, DemandRow, ReplacementWindow};
pub use rules::{AddRequest, RulesPolicy, SeatStatus, Verdict};
pub use store::{AuditEntry, AuditEvent, FileStore, MemoryStore, Snapshot, Store, StoreError};
