use std::fs::{self, File, OpenOptions};
use std::io::{self, BufRead, BufReader, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use parking_lot::Mutex;
use serde::{Deserialize, Serialize};

use super::{AuditEntry, Snapshot, Store, StoreError, SystemState};
use crate::catalog::{import_catalog, Catalog};

const SNAPSHOT_FORMAT: u32 = 1;
pub const SNAPSHOT_FILE: &str = "snapshot.json";
pub const AUDIT_FILE: &str = "audit.log";
pub const LOCK_FILE: &str = "krs.lock";
pub const CATALOG_DIR: &str = "catalog";
pub const COURSES_FILE: &str = "courses.csv";
pub const SECTIONS_FILE: &str = "sections.csv";

#[derive(Serialize, Deserialize)]
struct SnapshotFile {
    format: u32,
    seq: u64,
    state: SystemState,
}

/// Directory-backed store holding an exclusive lock on the directory for its
/// whole lifetime.
#[derive(Debug)]
pub struct FileStore {
    dir: PathBuf,
    log: Mutex<File>,
    durable: bool,
    _lock: File,
}

impl FileStore {
    /// Creates the directory layout if missing. Existing files are left alone.
    pub fn init(dir: impl AsRef<Path>) -> Result<(), StoreError> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir.join(CATALOG_DIR))?;
        let log = dir.join(AUDIT_FILE);
        if !log.exists() {
            File::create(&log)?;
        }
        if !dir.join(SNAPSHOT_FILE).exists() {
            write_snapshot_file(dir, &Snapshot::default())?;
        }
        Ok(())
    }

    /// Opens an initialized directory, taking its lock.
    pub fn open(dir: impl AsRef<Path>) -> Result<Self, StoreError> {
        let dir = dir.as_ref().to_path_buf();
        if !dir.is_dir() {
            return Err(StoreError::Io(io::Error::new(
                io::ErrorKind::NotFound,
                format!("state directory {} does not exist (run `krs init`)", dir.display()),
            )));
        }
        let lock = OpenOptions::new()
            .create(true)
            .truncate(false)
            .write(true)
            .open(dir.join(LOCK_FILE))?;
        if lock.try_lock().is_err() {
            return Err(StoreError::Locked(dir.display().to_string()));
        }
        let mut log = OpenOptions::new()
            .create(true)
            .read(true)
            .append(true)
            .open(dir.join(AUDIT_FILE))?;
        repair_torn_tail(&mut log)?;
        Ok(Self {
            dir,
            log: Mutex::new(log),
            durable: true,
            _lock: lock,
        })
    }

    /// Skips `fsync` on append; the write is still flushed to the OS.
    pub fn without_fsync(mut self) -> Self {
        self.durable = false;
        self
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }
}

/// A crash mid-append can leave a final line without its newline. If that
/// line parses it is kept (newline restored), otherwise it is cut off.
fn repair_torn_tail(log: &mut File) -> io::Result<()> {
    let len = log.metadata()?.len();
    if len == 0 {
        return Ok(());
    }
    let mut buf = Vec::with_capacity(len as usize);
    log.seek(SeekFrom::Start(0))?;
    log.read_to_end(&mut buf)?;
    if buf.last() == Some(&b'\n') {
        return Ok(());
    }
    let cut = buf.iter().rposition(|b| *b == b'\n').map_or(0, |p| p + 1);
    if serde_json::from_slice::<AuditEntry>(&buf[cut..]).is_ok() {
        log.write_all(b"\n")?;
    } else {
        log.set_len(cut as u64)?;
    }
    log.sync_data()
}

fn write_snapshot_file(dir: &Path, snapshot: &Snapshot) -> Result<(), StoreError> {
    let body = serde_json::to_vec_pretty(&SnapshotFile {
        format: SNAPSHOT_FORMAT,
        seq: snapshot.seq,
        state: snapshot.state.clone(),
    })
    .map_err(|e| StoreError::CorruptSnapshot(e.to_string()))?;
    let tmp = dir.join(format!("{SNAPSHOT_FILE}.tmp"));
    let mut f = File::create(&tmp)?;
    f.write_all(&body)?;
    f.sync_all()?;
    fs::rename(tmp, dir.join(SNAPSHOT_FILE))?;
    Ok(())
}

fn write_catalog(dir: &Path, catalog: &Catalog) -> Result<(), StoreError> {
    let cat_dir = dir.join(CATALOG_DIR);
    fs::create_dir_all(&cat_dir)?;
    let (mut courses, mut sections) = (Vec::new(), Vec::new());
    catalog
        .export(&mut courses, &mut sections)
        .map_err(|e| StoreError::Io(io::Error::other(e)))?;
    for (name, body) in [(COURSES_FILE, courses), (SECTIONS_FILE, sections)] {
        let tmp = cat_dir.join(format!("{name}.tmp"));
        fs::write(&tmp, body)?;
        fs::rename(tmp, cat_dir.join(name))?;
    }
    Ok(())
}

fn read_catalog(dir: &Path) -> Result<Catalog, StoreError> {
    let cat_dir = dir.join(CATALOG_DIR);
    let read = |name: &str| -> io::Result<Vec<u8>> {
        match fs::read(cat_dir.join(name)) {
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(Vec::new()),
            other => other,
        }
    };
    let (courses, sections) = (read(COURSES_FILE)?, read(SECTIONS_FILE)?);
    Ok(import_catalog(courses.as_slice(), sections.as_slice())?)
}

impl Store for FileStore {
    fn load_raw(&self) -> Result<(Snapshot, Vec<AuditEntry>), StoreError> {
        let catalog = read_catalog(&self.dir)?;
        let (seq, state) = match fs::read(self.dir.join(SNAPSHOT_FILE)) {
            Ok(bytes) => {
                let file: SnapshotFile = serde_json::from_slice(&bytes)
                    .map_err(|e| StoreError::CorruptSnapshot(e.to_string()))?;
                if file.format != SNAPSHOT_FORMAT {
                    return Err(StoreError::CorruptSnapshot(format!(
                        "unsupported snapshot format {}",
                        file.format
                    )));
                }
                (file.seq, file.state)
            }
            Err(e) if e.kind() == io::ErrorKind::NotFound => (0, SystemState::default()),
            Err(e) => return Err(e.into()),
        };
        Ok((
            Snapshot {
                seq,
                catalog,
                state,
            },
            self.entries()?,
        ))
    }

    fn append(&self, entry: &AuditEntry) -> Result<(), StoreError> {
        let mut line = serde_json::to_vec(entry).map_err(|e| StoreError::Io(io::Error::other(e)))?;
        line.push(b'\n');
        let mut log = self.log.lock();
        log.write_all(&line)?;
        log.flush()?;
        if self.durable {
            log.sync_data()?;
        }
        Ok(())
    }

    fn save_snapshot(&self, snapshot: &Snapshot) -> Result<(), StoreError> {
        write_catalog(&self.dir, &snapshot.catalog)?;
        write_snapshot_file(&self.dir, snapshot)
    }

    fn entries(&self) -> Result<Vec<AuditEntry>, StoreError> {
        let file = File::open(self.dir.join(AUDIT_FILE))?;
        let mut out = Vec::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let entry = serde_json::from_str(&line).map_err(|e| StoreError::CorruptLog {
                line: i + 1,
                reason: e.to_string(),
            })?;
            out.push(entry);
        }
        Ok(out)
    }
}
