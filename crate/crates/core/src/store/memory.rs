use std::sync::Arc;

use parking_lot::Mutex;

use super::{AuditEntry, Snapshot, Store, StoreError};

/// In-process store. Clones share the same log, so a test can keep a handle
/// and inspect or replay what an engine wrote.
#[derive(Debug, Clone, Default)]
pub struct MemoryStore {
    inner: Arc<Mutex<Inner>>,
}

#[derive(Debug, Default)]
struct Inner {
    snapshot: Snapshot,
    log: Vec<AuditEntry>,
    fail_appends: bool,
}

impl MemoryStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_snapshot(snapshot: Snapshot) -> Self {
        let store = Self::default();
        store.inner.lock().snapshot = snapshot;
        store
    }

    /// Makes every subsequent append fail with an I/O error.
    pub fn fail_appends(&self, fail: bool) {
        self.inner.lock().fail_appends = fail;
    }

    pub fn snapshot(&self) -> Snapshot {
        self.inner.lock().snapshot.clone()
    }
}

impl Store for MemoryStore {
    fn load_raw(&self) -> Result<(Snapshot, Vec<AuditEntry>), StoreError> {
        let inner = self.inner.lock();
        Ok((inner.snapshot.clone(), inner.log.clone()))
    }

    fn append(&self, entry: &AuditEntry) -> Result<(), StoreError> {
        let mut inner = self.inner.lock();
        if inner.fail_appends {
            return Err(StoreError::Io(std::io::Error::other("injected append failure")));
        }
        inner.log.push(entry.clone());
        Ok(())
    }

    fn save_snapshot(&self, snapshot: &Snapshot) -> Result<(), StoreError> {
        self.inner.lock().snapshot = snapshot.clone();
        Ok(())
    }

    fn entries(&self) -> Result<Vec<AuditEntry>, StoreError> {
        Ok(self.inner.lock().log.clone())
    }
}
