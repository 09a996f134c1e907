//! Shared, concurrently accessed registration state.
//!
//! Locking: a global gate (`RwLock`) is taken shared by every registration
//! operation and exclusively by cascades, admin mutations and snapshots.
//! Under the shared gate, each plan and each section slot has its own mutex,
//! always acquired plan first, then section, then the audit sequence. Audit
//! entries are appended while those locks are held, so the log order is a
//! valid serialization of every pair of conflicting operations.

use std::collections::BTreeMap;
use std::sync::Arc;

use chrono::FixedOffset;
use parking_lot::{Mutex, RwLock, RwLockReadGuard};
use thiserror::Error;

use crate::accounts::Account;
use crate::catalog::{Catalog, CatalogError};
use crate::domain::{
    active_credits, AcademicRecord, DomainError, Nim, RegistrationPlan, RuleViolation, SectionId,
    SectionState, StudentProfile, Term, TermCode, Timestamp, ViolationCode,
};
use crate::rules::{validate_add, AddRequest, RegistrationContext, RulesPolicy, SeatStatus};
use crate::store::{
    replay, Announcement, AuditEntry, AuditEvent, MemoryStore, Notification, Snapshot, Store,
    StoreError, SystemState,
};

#[derive(Debug, Clone, Copy)]
pub struct EngineConfig {
    pub policy: RulesPolicy,
    /// Offset used when rendering timestamps in documents.
    pub timezone: FixedOffset,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            policy: RulesPolicy::default(),
            timezone: FixedOffset::east_opt(7 * 3600).expect("valid offset"),
        }
    }
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("catalog rejected: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Catalog(Vec<CatalogError>),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error("UNKNOWN_TERM: {0}")]
    UnknownTerm(String),
    #[error("UNKNOWN_STUDENT: {0}")]
    UnknownStudent(String),
    #[error("UNKNOWN_SECTION: {0}")]
    UnknownSection(String),
    #[error("UNKNOWN_PLAN: no plan for {nim} in {term}")]
    UnknownPlan { nim: String, term: String },
    #[error("ALREADY_DECIDED: section {section_id} is {state}")]
    AlreadyDecided {
        section_id: SectionId,
        state: SectionState,
    },
    #[error("section {0} still has registered students and cannot be removed from the catalog")]
    SectionInUse(SectionId),
}

impl EngineError {
    pub fn code(&self) -> &'static str {
        match self {
            EngineError::Store(e) => e.code(),
            EngineError::Catalog(errs) => errs.first().map_or("CATALOG_ERROR", CatalogError::code),
            EngineError::Domain(DomainError::IllegalTransition { .. }) => "ILLEGAL_TRANSITION",
            EngineError::Domain(_) => "INVALID",
            EngineError::UnknownTerm(_) => "UNKNOWN_TERM",
            EngineError::UnknownStudent(_) => "UNKNOWN_STUDENT",
            EngineError::UnknownSection(_) => "UNKNOWN_SECTION",
            EngineError::UnknownPlan { .. } => "UNKNOWN_PLAN",
            EngineError::AlreadyDecided { .. } => "ALREADY_DECIDED",
            EngineError::SectionInUse(_) => "SECTION_IN_USE",
        }
    }

    /// Validation-class failures, as opposed to I/O or corruption.
    pub fn is_validation(&self) -> bool {
        !matches!(self, EngineError::Store(_))
    }
}

impl From<Vec<CatalogError>> for EngineError {
    fn from(errors: Vec<CatalogError>) -> Self {
        EngineError::Catalog(errors)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PlanKey {
    pub nim: Nim,
    pub term_code: TermCode,
}

impl PlanKey {
    pub fn new(nim: Nim, term_code: TermCode) -> Self {
        Self { nim, term_code }
    }
}

#[derive(Debug)]
pub(crate) struct SeatSlot {
    pub state: SectionState,
    pub enrolled: u32,
    pub capacity: u32,
}

impl SeatSlot {
    pub(crate) fn status(&self) -> SeatStatus {
        SeatStatus {
            state: self.state,
            enrolled: self.enrolled,
            capacity: self.capacity,
        }
    }
}

type PlanHandle = Arc<Mutex<RegistrationPlan>>;

pub(crate) struct Inner {
    pub catalog: Arc<Catalog>,
    pub terms: BTreeMap<TermCode, Term>,
    pub profiles: BTreeMap<Nim, StudentProfile>,
    pub records: BTreeMap<Nim, AcademicRecord>,
    pub accounts: BTreeMap<String, Account>,
    pub slots: BTreeMap<SectionId, Mutex<SeatSlot>>,
    pub plans: Mutex<BTreeMap<PlanKey, PlanHandle>>,
    pub announcements: Mutex<Vec<Announcement>>,
    pub notifications: Mutex<Vec<Notification>>,
}

impl Inner {
    fn from_snapshot(snapshot: Snapshot) -> Self {
        let Snapshot { catalog, state, .. } = snapshot;
        let counts = state.enrolled_counts();
        let slots = catalog
            .sections()
            .map(|s| {
                let slot = SeatSlot {
                    state: state.section_state(s.section_id.as_str()),
                    enrolled: counts.get(&s.section_id).copied().unwrap_or(0),
                    capacity: s.capacity,
                };
                (s.section_id.clone(), Mutex::new(slot))
            })
            .collect();
        let plans = state
            .plans
            .into_values()
            .flat_map(BTreeMap::into_values)
            .map(|p| (PlanKey::new(p.nim.clone(), p.term_code.clone()), Arc::new(Mutex::new(p))))
            .collect();
        Self {
            catalog: Arc::new(catalog),
            terms: state.terms,
            profiles: state.profiles,
            records: state.records,
            accounts: state.accounts,
            slots,
            plans: Mutex::new(plans),
            announcements: Mutex::new(state.announcements),
            notifications: Mutex::new(state.notifications),
        }
    }

    fn to_state(&self) -> SystemState {
        let mut plans: BTreeMap<Nim, BTreeMap<TermCode, RegistrationPlan>> = BTreeMap::new();
        for (key, handle) in self.plans.lock().iter() {
            let plan = handle.lock();
            // Empty plans are created on first touch and carry no history.
            if plan.lines.is_empty() && plan.print_count == 0 {
                continue;
            }
            plans
                .entry(key.nim.clone())
                .or_default()
                .insert(key.term_code.clone(), plan.clone());
        }
        let section_states = self
            .slots
            .iter()
            .filter_map(|(id, slot)| {
                let state = slot.lock().state;
                (state != SectionState::Open).then(|| (id.clone(), state))
            })
            .collect();
        SystemState {
            terms: self.terms.clone(),
            profiles: self.profiles.clone(),
            records: self.records.clone(),
            accounts: self.accounts.clone(),
            section_states,
            plans,
            announcements: self.announcements.lock().clone(),
            notifications: self.notifications.lock().clone(),
        }
    }

    pub(crate) fn term(&self, code: &TermCode) -> Option<&Term> {
        self.terms.get(code)
    }

    pub(crate) fn slot(&self, id: &SectionId) -> Option<&Mutex<SeatSlot>> {
        self.slots.get(id)
    }

    pub(crate) fn seat_status(&self, id: &SectionId) -> Option<SeatStatus> {
        self.slots.get(id).map(|s| s.lock().status())
    }

    pub(crate) fn plan_handle(&self, key: &PlanKey) -> Option<PlanHandle> {
        self.plans.lock().get(key).cloned()
    }

    pub(crate) fn plan_handle_or_create(&self, key: &PlanKey) -> PlanHandle {
        self.plans
            .lock()
            .entry(key.clone())
            .or_insert_with(|| {
                Arc::new(Mutex::new(RegistrationPlan::new(key.nim.clone(), key.term_code.clone())))
            })
            .clone()
    }

    pub(crate) fn plan_handles(&self) -> Vec<(PlanKey, PlanHandle)> {
        self.plans
            .lock()
            .iter()
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect()
    }

    /// Structural failures (unknown term or student) come back as a single
    /// `UNKNOWN_SECTION` violation.
    pub(crate) fn context_violations(
        &self,
        req: &AddRequest,
        plan: &RegistrationPlan,
        seats: Option<SeatStatus>,
        policy: RulesPolicy,
    ) -> Result<Vec<RuleViolation>, RuleViolation> {
        let sid = req.section_id.as_str();
        let term = self.terms.get(&req.term_code).ok_or_else(|| {
            RuleViolation::new(
                ViolationCode::UnknownSection,
                sid,
                format!("term {} is not defined", req.term_code),
            )
        })?;
        let profile = self.profiles.get(&req.nim).ok_or_else(|| {
            RuleViolation::new(
                ViolationCode::UnknownSection,
                sid,
                format!("student {} is not registered", req.nim),
            )
        })?;
        let empty;
        let record = match self.records.get(&req.nim) {
            Some(r) => r,
            None => {
                empty = AcademicRecord::empty(req.nim.clone());
                &empty
            }
        };
        let ctx = RegistrationContext {
            catalog: &self.catalog,
            term,
            profile,
            record,
            plan,
            seats,
            policy,
        };
        Ok(validate_add(req, &ctx))
    }
}

pub struct Engine {
    inner: RwLock<Inner>,
    last_seq: Mutex<u64>,
    store: Arc<dyn Store>,
    config: EngineConfig,
}

impl std::fmt::Debug for Engine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Engine")
            .field("seq", &*self.last_seq.lock())
            .field("config", &self.config)
            .finish_non_exhaustive()
    }
}

impl Engine {
    /// Loads the store's snapshot and replays its log.
    pub fn open(store: Arc<dyn Store>, config: EngineConfig) -> Result<Self, EngineError> {
        let (snapshot, entries) = store.load_raw()?;
        let snapshot = replay(snapshot, &entries)?;
        Ok(Self::from_parts(snapshot, store, config))
    }

    /// Engine over a fresh [`MemoryStore`] seeded with `snapshot` at seq 0.
    pub fn in_memory(mut snapshot: Snapshot, config: EngineConfig) -> (Self, MemoryStore) {
        snapshot.seq = 0;
        let store = MemoryStore::with_snapshot(snapshot.clone());
        let engine = Self::from_parts(snapshot, Arc::new(store.clone()), config);
        (engine, store)
    }

    fn from_parts(snapshot: Snapshot, store: Arc<dyn Store>, config: EngineConfig) -> Self {
        let seq = snapshot.seq;
        Self {
            inner: RwLock::new(Inner::from_snapshot(snapshot)),
            last_seq: Mutex::new(seq),
            store,
            config,
        }
    }

    pub(crate) fn read(&self) -> RwLockReadGuard<'_, Inner> {
        self.inner.read()
    }

    pub(crate) fn write(&self) -> parking_lot::RwLockWriteGuard<'_, Inner> {
        self.inner.write()
    }

    pub(crate) fn policy(&self) -> RulesPolicy {
        self.config.policy
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn store(&self) -> &Arc<dyn Store> {
        &self.store
    }

    /// Persists one entry and returns its seq. Nothing is mutated if this fails.
    pub fn append_audit(&self, actor: &str, at: Timestamp, event: AuditEvent) -> Result<u64, EngineError> {
        let mut last = self.last_seq.lock();
        let entry = AuditEntry {
            seq: *last + 1,
            at,
            actor: actor.to_owned(),
            event,
        };
        self.store.append(&entry)?;
        *last = entry.seq;
        Ok(entry.seq)
    }

    pub fn seq(&self) -> u64 {
        *self.last_seq.lock()
    }

    pub fn audit_entries(&self) -> Result<Vec<AuditEntry>, EngineError> {
        Ok(self.store.entries()?)
    }

    /// A consistent copy of the whole state.
    pub fn snapshot(&self) -> Snapshot {
        let inner = self.inner.write();
        self.snapshot_locked(&inner)
    }

    fn snapshot_locked(&self, inner: &Inner) -> Snapshot {
        Snapshot {
            seq: *self.last_seq.lock(),
            catalog: (*inner.catalog).clone(),
            state: inner.to_state(),
        }
    }

    /// Writes a snapshot at the current seq.
    pub fn checkpoint(&self) -> Result<u64, EngineError> {
        let inner = self.inner.write();
        let snap = self.snapshot_locked(&inner);
        self.store.save_snapshot(&snap)?;
        Ok(snap.seq)
    }

    /// Applies an administrative change to a copy of the state, saves it as
    /// the new snapshot and only then swaps it in.
    fn mutate_base(&self, f: impl FnOnce(&mut Snapshot) -> Result<(), EngineError>) -> Result<(), EngineError> {
        let mut inner = self.inner.write();
        let mut snap = self.snapshot_locked(&inner);
        f(&mut snap)?;
        self.store.save_snapshot(&snap)?;
        *inner = Inner::from_snapshot(snap);
        Ok(())
    }

    /// Replaces the catalog. Sections that still hold active lines must survive.
    pub fn import_catalog(&self, catalog: Catalog) -> Result<(), EngineError> {
        self.mutate_base(|snap| {
            for plan in snap.state.plans.values().flat_map(BTreeMap::values) {
                if let Some(line) = plan
                    .active_lines()
                    .find(|l| catalog.section(l.section_id.as_str()).is_none())
                {
                    return Err(EngineError::SectionInUse(line.section_id.clone()));
                }
            }
            snap.state
                .section_states
                .retain(|id, _| catalog.section(id.as_str()).is_some());
            snap.catalog = catalog;
            Ok(())
        })
    }

    pub fn upsert_term(&self, term: Term) -> Result<(), EngineError> {
        self.mutate_base(|snap| {
            snap.state.terms.insert(term.term_code.clone(), term);
            Ok(())
        })
    }

    pub fn import_students(
        &self,
        profiles: Vec<StudentProfile>,
        records: Vec<AcademicRecord>,
        accounts: Vec<Account>,
    ) -> Result<(), EngineError> {
        for p in &profiles {
            p.validate()?;
        }
        for r in &records {
            r.validate()?;
        }
        self.mutate_base(|snap| {
            for p in profiles {
                snap.state.profiles.insert(p.nim.clone(), p);
            }
            for r in records {
                if !snap.state.profiles.contains_key(&r.nim) {
                    return Err(EngineError::UnknownStudent(r.nim.to_string()));
                }
                snap.state.records.insert(r.nim.clone(), r);
            }
            for a in accounts {
                snap.state.accounts.insert(a.principal.clone(), a);
            }
            Ok(())
        })
    }

    pub fn upsert_account(&self, account: Account) -> Result<(), EngineError> {
        self.import_students(Vec::new(), Vec::new(), vec![account])
    }

    /// Edits a profile; recorded as one `ProfileChanged` entry.
    pub fn update_profile(
        &self,
        actor: &str,
        at: Timestamp,
        nim: &str,
        edit: impl FnOnce(&mut StudentProfile),
    ) -> Result<StudentProfile, EngineError> {
        let mut inner = self.inner.write();
        let mut profile = inner
            .profiles
            .get(nim)
            .cloned()
            .ok_or_else(|| EngineError::UnknownStudent(nim.to_owned()))?;
        edit(&mut profile);
        profile.validate()?;
        self.append_audit(
            actor,
            at,
            AuditEvent::ProfileChanged {
                profile: profile.clone(),
            },
        )?;
        inner.profiles.insert(profile.nim.clone(), profile.clone());
        Ok(profile)
    }

    pub fn catalog(&self) -> Arc<Catalog> {
        self.read().catalog.clone()
    }

    pub fn term(&self, code: &str) -> Option<Term> {
        self.read().terms.get(code).cloned()
    }

    pub fn terms(&self) -> Vec<Term> {
        self.read().terms.values().cloned().collect()
    }

    pub fn profile(&self, nim: &str) -> Option<StudentProfile> {
        self.read().profiles.get(nim).cloned()
    }

    pub fn record(&self, nim: &str) -> Option<AcademicRecord> {
        self.read().records.get(nim).cloned()
    }

    pub fn account(&self, principal: &str) -> Option<Account> {
        self.read().accounts.get(principal).cloned()
    }

    /// The account for `principal` when `password` matches.
    pub fn verify_login(&self, principal: &str, password: &str) -> Option<Account> {
        self.account(principal).filter(|a| a.verify(password))
    }

    /// Audits a successful login.
    pub fn record_login(&self, account: &Account, at: Timestamp) -> Result<u64, EngineError> {
        let _gate = self.read();
        self.append_audit(
            &account.principal,
            at,
            AuditEvent::SessionOpened {
                principal: account.principal.clone(),
                role: account.role,
            },
        )
    }

    /// The student's plan for a term; empty if nothing was committed yet.
    pub fn plan(&self, nim: &str, term: &str) -> Result<RegistrationPlan, EngineError> {
        let inner = self.read();
        let nim_key = inner
            .profiles
            .get_key_value(nim)
            .map(|(k, _)| k.clone())
            .ok_or_else(|| EngineError::UnknownStudent(nim.to_owned()))?;
        let term_key = inner
            .terms
            .get_key_value(term)
            .map(|(k, _)| k.clone())
            .ok_or_else(|| EngineError::UnknownTerm(term.to_owned()))?;
        let key = PlanKey::new(nim_key, term_key);
        Ok(inner
            .plan_handle(&key)
            .map(|h| h.lock().clone())
            .unwrap_or_else(|| RegistrationPlan::new(key.nim, key.term_code)))
    }

    pub fn active_credits(&self, plan: &RegistrationPlan) -> Result<u32, EngineError> {
        Ok(active_credits(plan, &*self.catalog())?)
    }

    pub fn seat_status(&self, section_id: &str) -> Option<SeatStatus> {
        self.read().seat_status(&SectionId::from(section_id))
    }

    pub fn announcements_since(&self, since: u64) -> Vec<Announcement> {
        self.read()
            .announcements
            .lock()
            .iter()
            .filter(|a| a.id > since)
            .cloned()
            .collect()
    }

    pub fn notifications_for(&self, nim: &str) -> Vec<Notification> {
        self.read()
            .notifications
            .lock()
            .iter()
            .filter(|n| n.nim.as_str() == nim)
            .cloned()
            .collect()
    }

    /// Publishes a staff announcement.
    pub fn post_announcement(
        &self,
        author: &str,
        at: Timestamp,
        title: &str,
        body: &str,
    ) -> Result<Announcement, EngineError> {
        let inner = self.read();
        let mut list = inner.announcements.lock();
        let announcement = Announcement {
            id: list.last().map_or(0, |a| a.id) + 1,
            posted_at: at,
            author: author.to_owned(),
            title: title.to_owned(),
            body: body.to_owned(),
        };
        self.append_audit(
            author,
            at,
            AuditEvent::AnnouncementPosted {
                announcement: announcement.clone(),
            },
        )?;
        list.push(announcement.clone());
        Ok(announcement)
    }

    /// Students holding an active line in the section, in nim order.
    pub fn roster(&self, section_id: &str) -> Result<Vec<Nim>, EngineError> {
        let inner = self.read();
        let section = inner
            .catalog
            .section(section_id)
            .ok_or_else(|| EngineError::UnknownSection(section_id.to_owned()))?;
        let mut out: Vec<Nim> = inner
            .plan_handles()
            .into_iter()
            .filter(|(k, _)| k.term_code == section.term_code)
            .filter(|(_, h)| h.lock().holds_active(&section.section_id))
            .map(|(k, _)| k.nim)
            .collect();
        out.sort();
        Ok(out)
    }
}
