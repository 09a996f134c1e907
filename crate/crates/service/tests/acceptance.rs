//! Acceptance suite. Run with `cargo test -p krs-service --test acceptance`;
//! prints one PASS/FAIL line per criterion and exits non-zero on any failure.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::{Arc, Barrier};
use std::time::{Duration, Instant};

use common::{sample_snapshot, fixture, term_20072, ts, Harness, DURING};
use krs_core::people::import_people;
use krs_core::rules::{prereq_satisfied, validate_add, RegistrationContext};
use krs_core::store::replay;
use krs_core::timetable::meetings_overlap;
use krs_core::{
    import_catalog, AcademicRecord, AddRequest, AuditEvent, Catalog, CompletedCourse, Course, CourseCode, Decision,
    Engine, EngineConfig, EngineError, FileStore, LineStatus, MeetingTime, PlanLine, RegistrationPlan, RulesPolicy,
    Section, Snapshot, Store, StudentProfile, TermCode, Timestamp, ViolationCode, Weekday,
};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde_json::json;

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn term_code() -> TermCode {
    TermCode::parse("20072").unwrap()
}

fn req(nim: &str, section: &str, at: Timestamp) -> AddRequest {
    AddRequest {
        nim: nim.into(),
        term_code: term_code(),
        section_id: section.into(),
        requested_at: at,
    }
}

fn meeting(s: &str) -> MeetingTime {
    s.parse().unwrap()
}

fn section(id: &str, course: &str, capacity: u32, meetings: Vec<MeetingTime>) -> Section {
    Section::new(id, course, "01", term_code(), capacity, meetings, "lect").unwrap()
}

fn base_snapshot(catalog: Catalog, students: &[StudentProfile]) -> Snapshot {
    let mut snap = Snapshot {
        seq: 0,
        catalog,
        ..Default::default()
    };
    let term = term_20072();
    snap.state.terms.insert(term.term_code.clone(), term);
    for p in students {
        snap.state.profiles.insert(p.nim.clone(), p.clone());
    }
    snap
}

const SAMPLE_LINES: [&str; 8] = [
    "ET3020-01", "ET3030-02", "ET3008-01", "ET3002-01", "ET3001-02", "EL3001-01", "ET5062-01", "KU4026-09",
];

fn sample_document() -> Outcome {
    let started = Instant::now();
    let catalog = import_catalog(
        File::open(fixture("courses.csv")).unwrap(),
        File::open(fixture("sections.csv")).unwrap(),
    )
    .map_err(|e| format!("import failed: {e:?}"))?;
    check(catalog.course_count() == 8, || format!("{} courses imported", catalog.course_count()))?;
    let people = import_people(File::open(fixture("students.csv")).unwrap(), None::<File>, &catalog).unwrap();
    let snap = base_snapshot(catalog, &people.profiles);
    let (engine, _) = Engine::in_memory(snap, EngineConfig::default());
    for sid in SAMPLE_LINES {
        let v = engine.commit_add(&req("13205012", sid, ts(DURING))).unwrap();
        check(v.accepted, || format!("{sid} rejected: {:?}", v.codes()))?;
    }
    let doc = engine.render_krs("13205012", "20072", ts(DURING)).unwrap();
    let elapsed = started.elapsed();
    check(doc.course_count == 8 && doc.total_credits == 20, || {
        format!("recap {} courses / {} SKS", doc.course_count, doc.total_credits)
    })?;
    check(
        doc.text.contains("Jumlah mata kuliah : 8") && doc.text.contains("Jumlah SKS : 20"),
        || "document recap lines missing".into(),
    )?;
    check(elapsed < Duration::from_secs(1), || format!("took {elapsed:?}"))?;
    Ok(format!("8 courses / 20 SKS in {elapsed:.2?}"))
}

fn credit_cap() -> Outcome {
    let courses = [
        Course::new("H1", "H1", 12, []).unwrap(),
        Course::new("H2", "H2", 6, []).unwrap(),
        Course::new("H3", "H3", 5, []).unwrap(),
        Course::new("T2", "T2", 2, []).unwrap(),
    ];
    let sections = [
        section("H1-01", "H1", 30, vec![meeting("MON 07:00-09:00")]),
        section("H2-01", "H2", 30, vec![meeting("TUE 07:00-09:00")]),
        section("H3-01", "H3", 30, vec![meeting("WED 07:00-09:00")]),
        section("T2-01", "T2", 30, vec![meeting("THU 07:00-09:00")]),
    ];
    let student = StudentProfile::new("N1", "Student", "TE").unwrap();
    let snap = base_snapshot(Catalog::from_parts(courses, sections).unwrap(), &[student]);
    let (engine, _) = Engine::in_memory(snap, EngineConfig::default());
    for sid in ["H1-01", "H2-01", "H3-01"] {
        check(engine.commit_add(&req("N1", sid, ts(DURING))).unwrap().accepted, || format!("{sid} rejected"))?;
    }
    let plan = engine.plan("N1", "20072").unwrap();
    let held = engine.active_credits(&plan).unwrap();
    check(held == 23, || format!("holding {held} SKS"))?;
    let first = engine.commit_add(&req("N1", "T2-01", ts(DURING))).unwrap();
    check(first.codes() == [ViolationCode::CreditCapExceeded], || format!("without permit: {:?}", first.codes()))?;
    engine
        .update_profile("staff1", ts(DURING), "N1", |p| p.over_credit_permit = true)
        .unwrap();
    let second = engine.commit_add(&req("N1", "T2-01", ts(DURING))).unwrap();
    check(second.accepted, || format!("with permit: {:?}", second.codes()))?;
    Ok("23+2 > 24 rejected; accepted with permit (25 SKS)".into())
}

fn print_counter() -> Outcome {
    let (engine, _) = Engine::in_memory(sample_snapshot(), EngineConfig::default());
    engine.commit_add(&req("13205012", "ET3020-01", ts(DURING))).unwrap();
    for _ in 0..5 {
        engine.render_krs("13205012", "20072", ts(DURING)).unwrap();
    }
    let count = engine.plan("13205012", "20072").unwrap().print_count;
    let printed = engine
        .audit_entries()
        .unwrap()
        .into_iter()
        .filter(|e| matches!(e.event, AuditEvent::PlanPrinted { .. }))
        .count();
    check(count == 5 && printed == 5, || format!("print_count {count}, {printed} PlanPrinted entries"))?;
    Ok("print_count 5, 5 PlanPrinted entries".into())
}

/// Brute force: mark every minute of `a` on a weekly grid, probe `b`.
fn grid_overlap(a: &MeetingTime, b: &MeetingTime) -> bool {
    let mut grid = vec![false; 7 * 1440];
    let base = |m: &MeetingTime| m.day().index() * 1440;
    for minute in a.start()..a.end() {
        grid[base(a) + minute as usize] = true;
    }
    (b.start()..b.end()).any(|minute| grid[base(b) + minute as usize])
}

fn random_meeting(rng: &mut StdRng) -> MeetingTime {
    // Few days and a coarse grid make touching and nested intervals common.
    let day = Weekday::ALL[rng.random_range(0..3)];
    let step = if rng.random_bool(0.5) { 30 } else { 1 };
    let start = rng.random_range(0..(1440 / step)) * step;
    let max_len = (1440 - start) / step;
    let len = rng.random_range(1..=max_len.min(240 / step).max(1)) * step;
    MeetingTime::new(day, start, start + len).unwrap()
}

fn conflict_oracle() -> Outcome {
    let mut rng = StdRng::seed_from_u64(0xC0FF_EE00);
    let started = Instant::now();
    let profile = StudentProfile::new("N1", "S", "TE").unwrap();
    let record = AcademicRecord::empty("N1".into());
    let term = term_20072();
    let pairs = 12_000;
    let mut clashes = 0;
    for i in 0..pairs {
        let (a, b) = (random_meeting(&mut rng), random_meeting(&mut rng));
        let expected = grid_overlap(&a, &b);
        clashes += usize::from(expected);
        check(meetings_overlap(&a, &b) == expected, || format!("pair {i}: {a} vs {b}"))?;
        check(meetings_overlap(&b, &a) == expected, || format!("pair {i} reversed: {b} vs {a}"))?;

        // Full rule path: holding A, request B.
        let catalog = Catalog::from_parts(
            [Course::new("A", "A", 2, []).unwrap(), Course::new("B", "B", 2, []).unwrap()],
            [section("A-01", "A", 10, vec![a]), section("B-01", "B", 10, vec![b])],
        )
        .unwrap();
        let mut plan = RegistrationPlan::new("N1".into(), term_code());
        plan.lines.push(PlanLine {
            section_id: "A-01".into(),
            status: LineStatus::Planned,
            committed_at: ts(DURING),
        });
        let ctx = RegistrationContext {
            catalog: &catalog,
            term: &term,
            profile: &profile,
            record: &record,
            plan: &plan,
            seats: None,
            policy: RulesPolicy::default(),
        };
        let codes: Vec<_> = validate_add(&req("N1", "B-01", ts(DURING)), &ctx).into_iter().map(|v| v.code).collect();
        let verdict = codes.contains(&ViolationCode::ScheduleConflict);
        check(verdict == expected, || format!("pair {i}: rules said {codes:?} for {a} vs {b}"))?;
    }
    let elapsed = started.elapsed();
    check(elapsed < Duration::from_secs(5), || format!("took {elapsed:?}"))?;
    Ok(format!("{pairs} pairs ({clashes} clashing), 100% agreement in {elapsed:.2?}"))
}

fn prerequisite_oracle() -> Outcome {
    let mut rng = StdRng::seed_from_u64(0xDA6_0001);
    let dags = 1200;
    let code = |i: usize| CourseCode::new(format!("P{i:02}"));
    for g in 0..dags {
        let n = rng.random_range(1..=12);
        // Random topological order, edges point backwards along it.
        let mut order: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            order.swap(i, rng.random_range(0..=i));
        }
        let p = rng.random_range(0.05..0.5);
        let mut direct: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
        for hi in 0..n {
            for lo in 0..hi {
                if rng.random_bool(p) {
                    direct[order[hi]].insert(order[lo]);
                }
            }
        }
        let catalog = Catalog::from_parts(
            (0..n).map(|i| Course::new(code(i), "c", 3, direct[i].iter().map(|&j| code(j))).unwrap()),
            [],
        )
        .map_err(|e| format!("dag {g} rejected: {e:?}"))?;

        // Exhaustive reachability by explicit path search.
        fn reach(direct: &[BTreeSet<usize>], from: usize, seen: &mut BTreeSet<usize>) {
            for &next in &direct[from] {
                if seen.insert(next) {
                    reach(direct, next, seen);
                }
            }
        }
        let mut record = AcademicRecord::empty("N".into());
        let mut passed_any = BTreeSet::new();
        let mut taken = BTreeSet::new();
        for i in 0..n {
            if rng.random_bool(0.6) {
                let passed = rng.random_bool(0.7);
                taken.insert(i);
                if passed {
                    passed_any.insert(i);
                }
                record.completed.push(CompletedCourse {
                    course_code: code(i),
                    passed,
                });
            }
        }
        for i in 0..n {
            let mut seen = BTreeSet::new();
            reach(&direct, i, &mut seen);
            let expected: BTreeSet<CourseCode> = seen.into_iter().map(code).collect();
            let got = catalog.prereq_closure(code(i).as_str()).unwrap();
            check(got == expected, || format!("dag {g} node {i}: closure {got:?} != {expected:?}"))?;

            let course = catalog.course(code(i).as_str()).unwrap();
            for require_pass in [true, false] {
                let ok_set = if require_pass { &passed_any } else { &taken };
                let expected_ok = direct[i].iter().all(|p| ok_set.contains(p));
                let got = prereq_satisfied(&record, course, require_pass).satisfied;
                check(got == expected_ok, || format!("dag {g} node {i} require_pass={require_pass}"))?;
            }
        }
    }
    Ok(format!("{dags} DAGs, closure and satisfaction 100% agreement"))
}

fn no_oversubscription() -> Outcome {
    let started = Instant::now();
    let students: Vec<StudentProfile> =
        (0..100).map(|i| StudentProfile::new(format!("S{i:03}"), "s", "TE").unwrap()).collect();
    let catalog = Catalog::from_parts(
        [Course::new("C1", "C1", 3, []).unwrap()],
        [section("C1-01", "C1", 30, vec![meeting("MON 07:00-09:00")])],
    )
    .unwrap();
    let initial = base_snapshot(catalog, &students);
    for run in 0..50 {
        let (engine, store) = Engine::in_memory(initial.clone(), EngineConfig::default());
        let barrier = Barrier::new(100);
        let verdicts: Vec<_> = std::thread::scope(|s| {
            let handles: Vec<_> = students
                .iter()
                .map(|p| {
                    let (engine, barrier) = (&engine, &barrier);
                    s.spawn(move || {
                        barrier.wait();
                        engine.commit_add(&req(p.nim.as_str(), "C1-01", ts(DURING))).unwrap()
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().unwrap()).collect()
        });
        let accepted = verdicts.iter().filter(|v| v.accepted).count();
        let full = verdicts.iter().filter(|v| v.codes() == [ViolationCode::SectionFull]).count();
        check(accepted == 30 && full == 70, || format!("run {run}: {accepted} accepted, {full} SECTION_FULL"))?;

        let (base, entries) = store.load_raw().unwrap();
        let replayed = replay(base, &entries).map_err(|e| format!("run {run}: replay failed: {e}"))?;
        let active: usize = replayed
            .state
            .plans
            .values()
            .flat_map(|m| m.values())
            .map(|p| p.active_lines().count())
            .sum();
        let counted = replayed.state.enrolled_counts().get("C1-01").copied().unwrap_or(0);
        let live = engine.seat_status("C1-01").unwrap().enrolled;
        check(active == 30 && counted == 30 && live == 30, || {
            format!("run {run}: replay {active} lines / {counted} seats, live {live}")
        })?;
    }
    let elapsed = started.elapsed();
    check(elapsed < Duration::from_secs(30), || format!("took {elapsed:?}"))?;
    Ok(format!("50 runs x 100 contenders: 30 committed / 70 SECTION_FULL each, replay conserved, {elapsed:.2?}"))
}

fn cancellation_cascade() -> Outcome {
    let mut snap = sample_snapshot();
    let nims: Vec<String> = (0..7).map(|i| format!("1320520{i}")).collect();
    for nim in &nims {
        let p = StudentProfile::new(nim.as_str(), "m", "TE").unwrap();
        snap.state.profiles.insert(p.nim.clone(), p);
    }
    let (engine, _) = Engine::in_memory(snap, EngineConfig::default());
    for nim in &nims {
        for sid in ["KU4026-01", "ET3001-01"] {
            check(engine.commit_add(&req(nim, sid, ts(DURING))).unwrap().accepted, || format!("{nim} {sid}"))?;
        }
    }
    let out = engine
        .decide_section("KU4026-01", Decision::Cancel, "staff1", ts(DURING))
        .map_err(|e| e.to_string())?;
    let mut cancelled = 0;
    for nim in &nims {
        let plan = engine.plan(nim, "20072").unwrap();
        cancelled += plan.lines.iter().filter(|l| l.status == LineStatus::Cancelled).count();
        let credits = engine.active_credits(&plan).unwrap();
        check(credits == 3, || format!("{nim} still counts {credits} SKS"))?;
    }
    let notes: usize = nims.iter().map(|n| engine.notifications_for(n).len()).sum();
    let announcements = engine.announcements_since(0).len();
    check(cancelled == 7 && notes == 7 && announcements == 1 && out.affected.len() == 7, || {
        format!("{cancelled} cancelled, {notes} notifications, {announcements} announcements")
    })?;

    let (before, seq) = (engine.snapshot(), engine.seq());
    let again = engine.decide_section("KU4026-01", Decision::Cancel, "staff1", ts(DURING));
    check(matches!(again, Err(EngineError::AlreadyDecided { .. })), || format!("second cancel: {again:?}"))?;
    check(engine.snapshot() == before && engine.seq() == seq, || "second cancel changed state".into())?;
    Ok("7 lines cancelled, 7 notifications, 1 announcement; repeat is ALREADY_DECIDED".into())
}

fn window_gating() -> Outcome {
    let term = term_20072();
    let (open, close) = (term.registration_window.open_at, term.registration_window.close_at);
    let second = chrono::Duration::seconds(1);
    let probes = [(open - second, false), (open, true), (close, true), (close + second, false)];
    let mut seen = Vec::new();
    for (at, expect) in probes {
        let (engine, _) = Engine::in_memory(sample_snapshot(), EngineConfig::default());
        let v = engine.commit_add(&req("13205012", "ET3020-01", at)).unwrap();
        if !expect {
            check(v.codes() == [ViolationCode::WindowClosed], || format!("{at}: {:?}", v.codes()))?;
        }
        check(v.accepted == expect, || format!("{at}: accepted={}", v.accepted))?;
        seen.push(if v.accepted { "accepted" } else { "rejected" });
    }
    Ok(seen.join(", "))
}

fn persistence_round_trip() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    FileStore::init(dir.path()).unwrap();
    FileStore::open(dir.path()).unwrap().save_snapshot(&sample_snapshot()).unwrap();
    let sections: Vec<String> = sample_snapshot().catalog.sections().map(|s| s.section_id.to_string()).collect();
    let nims = ["13205012", "13205013", "13205014"];
    let mut rng = StdRng::seed_from_u64(100);

    let before = {
        let engine = Engine::open(Arc::new(FileStore::open(dir.path()).unwrap()), EngineConfig::default()).unwrap();
        let mut actions = 0;
        let mut at = ts("2008-02-15T00:00:00Z");
        while actions < 100 {
            at += chrono::Duration::seconds(37);
            let nim = nims[rng.random_range(0..3)];
            let sid = sections[rng.random_range(0..sections.len())].as_str();
            let seq = engine.seq();
            match rng.random_range(0..20) {
                0..=10 => drop(engine.commit_add(&req(nim, sid, at)).unwrap()),
                11..=14 => drop(engine.commit_withdraw(&nim.into(), &term_code(), &sid.into(), at).unwrap()),
                15 | 16 => drop(engine.render_krs(nim, "20072", at).unwrap()),
                17 => drop(engine.update_profile("staff1", at, nim, |p| p.credit_cap = 20 + (at.timestamp() % 5) as u32)),
                18 => drop(engine.post_announcement("staff1", at, "Info", "Jadwal KRS")),
                _ => drop(engine.decide_section(sid, Decision::Cancel, "staff1", at)),
            }
            actions += (engine.seq() - seq) as usize;
        }
        engine.snapshot()
    };
    let after = Engine::open(Arc::new(FileStore::open(dir.path()).unwrap()), EngineConfig::default())
        .map_err(|e| e.to_string())?
        .snapshot();
    check(after == before, || "reloaded state differs".into())?;
    let lines: usize = after.state.plans.values().flat_map(|m| m.values()).map(|p| p.lines.len()).sum();
    Ok(format!("{} audited actions, {lines} plan lines, identical after restart", before.seq))
}

/// One step of the scripted registration day.
#[derive(Clone, Copy)]
enum Step {
    Add(&'static str, &'static str),
    Withdraw(&'static str, &'static str),
    Print(&'static str),
    Decide(&'static str, Decision),
    Announce(&'static str),
}

const DAY: [Step; 22] = [
    Step::Add("13205012", "ET3020-01"),
    Step::Add("13205012", "ET3030-02"),
    Step::Add("13205012", "KU4026-01"),
    Step::Add("13205012", "ET5062-01"),
    Step::Add("13205013", "ET3020-01"),
    Step::Add("13205013", "KU4026-01"),
    Step::Add("13205013", "ET3001-02"),
    Step::Add("13205014", "KU4026-01"),
    Step::Add("13205014", "ET3030-01"),
    Step::Add("13205014", "EL3001-01"),
    Step::Add("13205014", "ET3020-02"),
    Step::Add("13205013", "ET3020-02"),
    Step::Add("13205014", "ET3002-01"),
    Step::Withdraw("13205012", "ET5062-01"),
    Step::Print("13205012"),
    Step::Decide("KU4026-01", Decision::Cancel),
    Step::Add("13205012", "KU4026-09"),
    Step::Add("13205013", "KU4026-01"),
    Step::Add("13205013", "KU4026-09"),
    Step::Announce("Pengganti KU4026 tersedia di kelas 09"),
    Step::Decide("ET3020-01", Decision::Confirm),
    Step::Print("13205013"),
];

fn step_time(i: usize) -> Timestamp {
    ts("2008-02-25T01:00:00Z") + chrono::Duration::minutes(10 * i as i64)
}

fn api_vs_library() -> Outcome {
    // Both sides start from one snapshot; account hashes are salted per build.
    let initial = sample_snapshot();
    let (lib, _) = Engine::in_memory(initial.clone(), EngineConfig::default());
    let mut lib_results = Vec::new();
    for (i, step) in DAY.iter().enumerate() {
        let at = step_time(i);
        let r = match *step {
            Step::Add(n, s) => {
                let v = lib.commit_add(&req(n, s, at)).unwrap();
                if v.accepted { "ok".to_string() } else { format!("{:?}", v.codes()) }
            }
            Step::Withdraw(n, s) => {
                let v = lib.commit_withdraw(&n.into(), &term_code(), &s.into(), at).unwrap();
                if v.accepted { "ok".to_string() } else { format!("{:?}", v.codes()) }
            }
            Step::Print(n) => lib.render_krs(n, "20072", at).map(|_| "ok".to_string()).unwrap(),
            Step::Decide(s, d) => lib.decide_section(s, d, "staff1", at).map(|_| "ok".to_string()).unwrap(),
            Step::Announce(t) => lib.post_announcement("staff1", at, t, t).map(|_| "ok".to_string()).unwrap(),
        };
        lib_results.push(r);
    }

    // HTTP side, same script, clock pinned to the same instants.
    let rt = tokio::runtime::Runtime::new().unwrap();
    let h = Harness::new(initial);
    let http_results: Vec<String> = rt.block_on(async {
        let mut out = Vec::new();
        for (i, step) in DAY.iter().enumerate() {
            // Sessions are short-lived; sign in afresh at every step.
            h.clock.set(step_time(i));
            let mut tokens = BTreeMap::new();
            for (who, pw) in [("13205012", "dian"), ("13205013", "made"), ("13205014", "sri"), ("staff1", "staffpw")] {
                tokens.insert(who, h.login(who, pw).await);
            }
            let resp = match *step {
                Step::Add(n, s) => h.post(&format!("/api/v1/students/{n}/plan/lines"), &tokens[n], json!({"section_id": s})).await,
                Step::Withdraw(n, s) => h.delete(&format!("/api/v1/students/{n}/plan/lines/{s}"), &tokens[n]).await,
                Step::Print(n) => h.get(&format!("/api/v1/students/{n}/plan/document?term=20072"), &tokens[n]).await,
                Step::Decide(s, d) => {
                    let d = if d == Decision::Cancel { "cancel" } else { "confirm" };
                    h.post(&format!("/api/v1/staff/sections/{s}/decision"), &tokens["staff1"], json!({"decision": d})).await
                }
                Step::Announce(t) => h.post("/api/v1/announcements", &tokens["staff1"], json!({"title": t, "body": t})).await,
            };
            out.push(if resp.status.is_success() {
                "ok".to_string()
            } else if resp.status != 409 {
                format!("HTTP {}: {}", resp.status, resp.text)
            } else {
                let codes: Vec<ViolationCode> = resp
                    .codes()
                    .iter()
                    .map(|c| serde_json::from_value(json!(c)).unwrap())
                    .collect();
                format!("{codes:?}")
            });
        }
        out
    });

    check(http_results == lib_results, || format!("verdicts differ:\n http {http_results:?}\n lib  {lib_results:?}"))?;
    let (via_http, via_lib) = (h.engine.snapshot(), lib.snapshot());
    let (a, b) = (&via_http.state, &via_lib.state);
    let differing: Vec<&str> = [
        ("terms", a.terms == b.terms),
        ("profiles", a.profiles == b.profiles),
        ("records", a.records == b.records),
        ("accounts", a.accounts == b.accounts),
        ("section_states", a.section_states == b.section_states),
        ("plans", a.plans == b.plans),
        ("announcements", a.announcements == b.announcements),
        ("notifications", a.notifications == b.notifications),
    ]
    .into_iter()
    .filter_map(|(name, same)| (!same).then_some(name))
    .collect();
    check(differing.is_empty(), || format!("final state differs in {differing:?}"))?;
    check(via_http.catalog == via_lib.catalog, || "catalogs differ".into())?;
    let project = |entries: Vec<krs_core::AuditEntry>| -> Vec<_> {
        entries
            .into_iter()
            .filter(|e| e.event.action() != "SessionOpened")
            .map(|e| (e.at, e.actor, e.event))
            .collect()
    };
    check(project(h.engine.audit_entries().unwrap()) == project(lib.audit_entries().unwrap()), || {
        "audit trails differ".into()
    })?;
    let rejected = lib_results.iter().filter(|r| *r != "ok").count();
    Ok(format!("{} steps ({rejected} rejected) give equal state and audit trail", DAY.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("sample-document", sample_document),
        ("credit-cap", credit_cap),
        ("print-counter", print_counter),
        ("conflict-oracle", conflict_oracle),
        ("prerequisite-oracle", prerequisite_oracle),
        ("no-oversubscription", no_oversubscription),
        ("cancellation-cascade", cancellation_cascade),
        ("window-gating", window_gating),
        ("persistence-round-trip", persistence_round_trip),
        ("api-vs-library", api_vs_library),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let result = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|panic| {
            let msg = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match result {
            Ok(detail) => println!("PASS  {name:<24} {detail}"),
            Err(reason) => {
                failed += 1;
                println!("FAIL  {name:<24} {reason}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
