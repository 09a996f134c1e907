mod common;

use std::io::Write;
use std::sync::Arc;

use common::{add, sample_snapshot, ts};
use krs_core::store::replay;
use krs_core::{
    CaseStatus, Decision, Engine, EngineConfig, FileStore, Snapshot, Store, StoreError, TermCode,
};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

const SECTIONS: [&str; 12] = [
    "ET3020-01", "ET3020-02", "ET3030-01", "ET3030-02", "ET3008-01", "ET3002-01", "ET3001-01", "ET3001-02",
    "EL3001-01", "ET5062-01", "KU4026-01", "KU4026-09",
];
const NIMS: [&str; 3] = ["13205012", "13205013", "13205014"];

fn open(dir: &std::path::Path) -> Engine {
    let store = FileStore::open(dir).unwrap().without_fsync();
    Engine::open(Arc::new(store), EngineConfig::default()).unwrap()
}

fn seeded_dir() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    FileStore::init(dir.path()).unwrap();
    FileStore::open(dir.path()).unwrap().save_snapshot(&sample_snapshot()).unwrap();
    dir
}

/// Drives `n` mixed actions; every one of them writes an audit entry.
fn scripted_session(engine: &Engine, n: usize, seed: u64) {
    let mut rng = StdRng::seed_from_u64(seed);
    let term = TermCode::parse("20072").unwrap();
    let mut done = 0;
    let mut minute = 0;
    while done < n {
        minute += 1;
        let at = ts("2008-02-20T00:00:00Z") + chrono::Duration::minutes(minute);
        let at_s = at.to_rfc3339();
        let nim = NIMS[rng.random_range(0..NIMS.len())];
        let sid = SECTIONS[rng.random_range(0..SECTIONS.len())];
        let before = engine.seq();
        match rng.random_range(0..10) {
            0..=4 => {
                engine.commit_add(&add(nim, sid, &at_s)).unwrap();
            }
            5 | 6 => {
                engine.commit_withdraw(&nim.into(), &term, &sid.into(), at).unwrap();
            }
            7 => {
                engine.render_krs(nim, "20072", at).unwrap();
            }
            8 => {
                engine
                    .update_profile("staff1", at, nim, |p| {
                        p.over_credit_permit = !p.over_credit_permit;
                        p.case_status = CaseStatus::None;
                    })
                    .unwrap();
            }
            _ => {
                let d = if rng.random_bool(0.5) { Decision::Cancel } else { Decision::Confirm };
                let _ = engine.decide_section(sid, d, "staff1", at);
            }
        }
        done += (engine.seq() - before) as usize;
    }
}

#[test]
fn hundred_actions_survive_restart() {
    let dir = seeded_dir();
    let before = {
        let engine = open(dir.path());
        scripted_session(&engine, 100, 42);
        assert!(engine.seq() >= 100);
        engine.snapshot()
    };
    let after = open(dir.path()).snapshot();
    assert_eq!(after, before);
    assert!(!after.state.plans.is_empty());
}

#[test]
fn checkpoint_then_more_actions() {
    let dir = seeded_dir();
    let before = {
        let engine = open(dir.path());
        scripted_session(&engine, 40, 1);
        engine.checkpoint().unwrap();
        scripted_session(&engine, 40, 2);
        engine.snapshot()
    };
    assert_eq!(open(dir.path()).snapshot(), before);
}

#[test]
fn torn_final_entry_is_discarded() {
    let dir = seeded_dir();
    let before = {
        let engine = open(dir.path());
        scripted_session(&engine, 20, 3);
        engine.snapshot()
    };
    let mut log = std::fs::OpenOptions::new().append(true).open(dir.path().join("audit.log")).unwrap();
    log.write_all(br#"{"seq":999,"at":"2008-02-2"#).unwrap();
    drop(log);
    let engine = open(dir.path());
    assert_eq!(engine.snapshot(), before);
    // The next append continues from the last complete entry.
    scripted_session(&engine, 1, 4);
    assert_eq!(engine.seq(), before.seq + 1);
}

#[test]
fn second_process_is_locked_out() {
    let dir = seeded_dir();
    let _engine = open(dir.path());
    assert!(matches!(FileStore::open(dir.path()), Err(StoreError::Locked(_))));
}

#[test]
fn replay_from_initial_snapshot_reproduces_state() {
    let initial: Snapshot = sample_snapshot();
    let (engine, store) = Engine::in_memory(initial.clone(), EngineConfig::default());
    scripted_session(&engine, 100, 9);
    let entries = store.entries().unwrap();
    let replayed = replay(initial, &entries).unwrap();
    assert_eq!(replayed, engine.snapshot());

    // Any prefix replays too, and a gap is detected.
    let prefix = replay(sample_snapshot(), &entries[..50]).unwrap();
    assert_eq!(prefix.seq, 50);
    let mut gapped = entries.clone();
    gapped.remove(10);
    assert!(matches!(replay(sample_snapshot(), &gapped), Err(StoreError::GapInLog(11))));
}
