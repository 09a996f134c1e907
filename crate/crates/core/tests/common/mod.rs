#![allow(dead_code)]

use std::fs::File;
use std::path::PathBuf;

use krs_core::people::import_people;
use krs_core::{
    import_catalog, AddRequest, Catalog, Course, Engine, EngineConfig, MeetingTime, MemoryStore, Section,
    Snapshot, Term, TermCode, Timestamp, Window,
};

pub fn ts(s: &str) -> Timestamp {
    s.parse().unwrap()
}

pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data/sample_term")
}

pub fn sample_catalog() -> Catalog {
    let dir = fixture_dir();
    import_catalog(
        File::open(dir.join("courses.csv")).unwrap(),
        File::open(dir.join("sections.csv")).unwrap(),
    )
    .unwrap()
}

/// Registration 2008-02-01..2008-02-29, payment from 2008-02-10.
pub fn term_20072() -> Term {
    Term::new(
        TermCode::parse("20072").unwrap(),
        Window::new(ts("2008-02-01T00:00:00Z"), ts("2008-02-29T00:00:00Z")).unwrap(),
        Window::new(ts("2008-02-10T00:00:00Z"), ts("2008-03-15T00:00:00Z")).unwrap(),
        10,
    )
}

pub const DURING: &str = "2008-02-25T10:17:01Z";

/// sample catalog, term 20072 and the three fixture students.
pub fn sample_snapshot() -> Snapshot {
    let catalog = sample_catalog();
    let dir = fixture_dir();
    let people = import_people(
        File::open(dir.join("students.csv")).unwrap(),
        Some(File::open(dir.join("records.csv")).unwrap()),
        &catalog,
    )
    .unwrap();
    let mut snap = Snapshot {
        seq: 0,
        catalog,
        ..Default::default()
    };
    let term = term_20072();
    snap.state.terms.insert(term.term_code.clone(), term);
    for p in people.profiles {
        snap.state.profiles.insert(p.nim.clone(), p);
    }
    for r in people.records {
        snap.state.records.insert(r.nim.clone(), r);
    }
    for a in people.accounts {
        snap.state.accounts.insert(a.principal.clone(), a);
    }
    snap
}

pub fn sample_engine() -> (Engine, MemoryStore) {
    Engine::in_memory(sample_snapshot(), EngineConfig::default())
}

pub fn add(nim: &str, section: &str, at: &str) -> AddRequest {
    AddRequest {
        nim: nim.into(),
        term_code: TermCode::parse("20072").unwrap(),
        section_id: section.into(),
        requested_at: ts(at),
    }
}

/// One course and one section with the given capacity, plus `students`
/// students `S000..`.
pub fn single_section_snapshot(capacity: u32, students: usize) -> Snapshot {
    let course = Course::new("C1", "Course", 3, []).unwrap();
    let section = Section::new(
        "C1-01",
        "C1",
        "01",
        TermCode::parse("20072").unwrap(),
        capacity,
        vec!["MON 07:00-09:00".parse::<MeetingTime>().unwrap()],
        "lect",
    )
    .unwrap();
    let mut snap = Snapshot {
        seq: 0,
        catalog: Catalog::from_parts([course], [section]).unwrap(),
        ..Default::default()
    };
    let term = term_20072();
    snap.state.terms.insert(term.term_code.clone(), term);
    for i in 0..students {
        let p = krs_core::StudentProfile::new(format!("S{i:03}"), format!("Student {i}"), "TE").unwrap();
        snap.state.profiles.insert(p.nim.clone(), p);
    }
    snap
}
