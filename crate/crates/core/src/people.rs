//! Student and academic-record import files.
//!
//! * students: `nim,name,program,credit_cap,password` (`credit_cap` may be empty)
//! * records: `nim,course_code,passed` with `passed` one of `true/false/1/0/y/n`

use std::collections::BTreeMap;
use std::io::Read;

use thiserror::Error;

use crate::accounts::{Account, Role};
use crate::catalog::Catalog;
use crate::domain::{AcademicRecord, CompletedCourse, CourseCode, Nim, StudentProfile, DEFAULT_CREDIT_CAP};

pub const STUDENTS_HEADER: [&str; 5] = ["nim", "name", "program", "credit_cap", "password"];
pub const RECORDS_HEADER: [&str; 3] = ["nim", "course_code", "passed"];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{file}:{line}: {message}")]
pub struct PeopleError {
    pub file: &'static str,
    pub line: u64,
    pub message: String,
}

#[derive(Debug, Clone, Default)]
pub struct People {
    pub profiles: Vec<StudentProfile>,
    pub records: Vec<AcademicRecord>,
    pub accounts: Vec<Account>,
}

fn parse_bool(raw: &str) -> Option<bool> {
    match raw.to_ascii_lowercase().as_str() {
        "true" | "1" | "y" | "yes" => Some(true),
        "false" | "0" | "n" | "no" => Some(false),
        _ => None,
    }
}

fn rows<R: Read>(
    source: R,
    file: &'static str,
    header: &[&str],
    errors: &mut Vec<PeopleError>,
) -> Vec<(u64, csv::StringRecord)> {
    let mut rdr = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(source);
    match rdr.headers() {
        Ok(h) if h.is_empty() || h.iter().eq(header.iter().copied()) => {}
        Ok(_) | Err(_) => {
            errors.push(PeopleError {
                file,
                line: 1,
                message: format!("header must be `{}`", header.join(",")),
            });
            return Vec::new();
        }
    }
    let mut out = Vec::new();
    for row in rdr.records() {
        match row {
            Ok(r) if r.len() == header.len() => out.push((r.position().map_or(0, |p| p.line()), r)),
            Ok(r) => errors.push(PeopleError {
                file,
                line: r.position().map_or(0, |p| p.line()),
                message: format!("expected {} fields, found {}", header.len(), r.len()),
            }),
            Err(e) => errors.push(PeopleError {
                file,
                line: e.position().map_or(0, |p| p.line()),
                message: e.to_string(),
            }),
        }
    }
    out
}

/// Parses both files; credit totals on each record are summed from the catalog.
pub fn import_people<S: Read, R: Read>(
    students: S,
    records: Option<R>,
    catalog: &Catalog,
) -> Result<People, Vec<PeopleError>> {
    let mut errors = Vec::new();
    let mut people = People::default();
    let mut known: BTreeMap<Nim, ()> = BTreeMap::new();

    for (line, row) in rows(students, "students", &STUDENTS_HEADER, &mut errors) {
        let err = |message: String| PeopleError {
            file: "students",
            line,
            message,
        };
        let mut profile = match StudentProfile::new(&row[0], &row[1], &row[2]) {
            Ok(p) => p,
            Err(e) => {
                errors.push(err(e.to_string()));
                continue;
            }
        };
        if !row[3].is_empty() {
            match row[3].parse::<u32>() {
                Ok(cap) if cap >= 1 => profile.credit_cap = cap,
                _ => {
                    errors.push(err(format!("credit_cap {:?} must be a positive integer", &row[3])));
                    continue;
                }
            }
        } else {
            profile.credit_cap = DEFAULT_CREDIT_CAP;
        }
        if known.insert(profile.nim.clone(), ()).is_some() {
            errors.push(err(format!("duplicate nim {}", profile.nim)));
            continue;
        }
        if row[4].is_empty() {
            errors.push(err("password is empty".into()));
            continue;
        }
        people.accounts.push(Account::new(profile.nim.as_str(), Role::Student, &row[4]));
        people.profiles.push(profile);
    }

    let mut by_nim: BTreeMap<Nim, AcademicRecord> = BTreeMap::new();
    if let Some(records) = records {
        for (line, row) in rows(records, "records", &RECORDS_HEADER, &mut errors) {
            let err = |message: String| PeopleError {
                file: "records",
                line,
                message,
            };
            let nim = Nim::from(&row[0]);
            if !known.contains_key(&nim) {
                errors.push(err(format!("unknown student {nim}")));
                continue;
            }
            let code = CourseCode::from(&row[1]);
            let Some(course) = catalog.course(code.as_str()) else {
                errors.push(err(format!("unknown course {code}")));
                continue;
            };
            let Some(passed) = parse_bool(&row[2]) else {
                errors.push(err(format!("passed {:?} is not a boolean", &row[2])));
                continue;
            };
            let rec = by_nim
                .entry(nim.clone())
                .or_insert_with(|| AcademicRecord::empty(nim));
            rec.credits_total += course.credits;
            if passed {
                rec.credits_passed += course.credits;
            }
            rec.completed.push(CompletedCourse {
                course_code: code,
                passed,
            });
        }
    }
    people.records = by_nim.into_values().collect();

    if errors.is_empty() {
        Ok(people)
    } else {
        Err(errors)
    }
}
