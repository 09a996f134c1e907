//! Course catalog, per-term section schedule and the prerequisite graph.
//!
//! Catalogs are imported from two comma-separated files with header rows:
//!
//! * courses: `code,title,credits,prereqs` (`prereqs` is `;`-separated)
//! * sections: `section_id,course_code,class_label,term_code,capacity,lecturer,meetings`
//!   (`meetings` is `;`-separated `DAY hh:mm-hh:mm` tokens)
//!
//! Import never stops at the first problem; every error in both files is
//! collected and returned together.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{
    Course, CourseCode, CourseLookup, MeetingTime, Section, SectionId, Term, TermCode,
};

pub const COURSES_HEADER: [&str; 4] = ["code", "title", "credits", "prereqs"];
pub const SECTIONS_HEADER: [&str; 7] = [
    "section_id",
    "course_code",
    "class_label",
    "term_code",
    "capacity",
    "lecturer",
    "meetings",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceFile {
    Courses,
    Sections,
}

impl fmt::Display for SourceFile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SourceFile::Courses => "courses",
            SourceFile::Sections => "sections",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
#[serde(tag = "code", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CatalogError {
    #[error("PARSE_ERROR {file}:{line}: {message}")]
    ParseError {
        file: SourceFile,
        line: u64,
        message: String,
    },
    #[error("UNKNOWN_PREREQ: {course} requires unknown course {prereq}")]
    UnknownPrereq { course: CourseCode, prereq: CourseCode },
    #[error("PREREQ_CYCLE: {}", display_cycle(.cycle))]
    PrereqCycle { cycle: Vec<CourseCode> },
    #[error("DUPLICATE_CODE: {value}")]
    DuplicateCode { value: String },
    #[error("UNKNOWN_COURSE: {0}")]
    UnknownCourse(CourseCode),
    #[error("UNKNOWN_TERM: {0}")]
    UnknownTerm(TermCode),
}

fn display_cycle(cycle: &[CourseCode]) -> String {
    cycle
        .iter()
        .map(CourseCode::as_str)
        .collect::<Vec<_>>()
        .join(" -> ")
}

impl CatalogError {
    pub fn code(&self) -> &'static str {
        match self {
            CatalogError::ParseError { .. } => "PARSE_ERROR",
            CatalogError::UnknownPrereq { .. } => "UNKNOWN_PREREQ",
            CatalogError::PrereqCycle { .. } => "PREREQ_CYCLE",
            CatalogError::DuplicateCode { .. } => "DUPLICATE_CODE",
            CatalogError::UnknownCourse(_) => "UNKNOWN_COURSE",
            CatalogError::UnknownTerm(_) => "UNKNOWN_TERM",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Catalog {
    courses: BTreeMap<CourseCode, Course>,
    sections: BTreeMap<SectionId, Section>,
    by_term: BTreeMap<TermCode, BTreeSet<SectionId>>,
}

impl Catalog {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Validates and indexes already-constructed courses and sections.
    pub fn from_parts(
        courses: impl IntoIterator<Item = Course>,
        sections: impl IntoIterator<Item = Section>,
    ) -> Result<Self, Vec<CatalogError>> {
        let mut errors = Vec::new();
        let mut course_map = BTreeMap::new();
        for course in courses {
            if course_map.contains_key(&course.code) {
                errors.push(CatalogError::DuplicateCode {
                    value: course.code.to_string(),
                });
                continue;
            }
            course_map.insert(course.code.clone(), course);
        }
        check_prerequisites(&course_map, &mut errors);

        let mut section_map = BTreeMap::new();
        for section in sections {
            if !course_map.contains_key(&section.course_code) {
                errors.push(CatalogError::UnknownCourse(section.course_code.clone()));
            }
            if section_map.contains_key(&section.section_id) {
                errors.push(CatalogError::DuplicateCode {
                    value: section.section_id.to_string(),
                });
                continue;
            }
            section_map.insert(section.section_id.clone(), section);
        }

        if !errors.is_empty() {
            return Err(errors);
        }
        let mut by_term: BTreeMap<TermCode, BTreeSet<SectionId>> = BTreeMap::new();
        for s in section_map.values() {
            by_term
                .entry(s.term_code.clone())
                .or_default()
                .insert(s.section_id.clone());
        }
        Ok(Self {
            courses: course_map,
            sections: section_map,
            by_term,
        })
    }

    pub fn course(&self, code: &str) -> Option<&Course> {
        self.courses.get(code)
    }

    pub fn section(&self, id: &str) -> Option<&Section> {
        self.sections.get(id)
    }

    pub fn courses(&self) -> impl Iterator<Item = &Course> {
        self.courses.values()
    }

    pub fn sections(&self) -> impl Iterator<Item = &Section> {
        self.sections.values()
    }

    pub fn course_count(&self) -> usize {
        self.courses.len()
    }

    pub fn section_count(&self) -> usize {
        self.sections.len()
    }

    pub fn is_empty(&self) -> bool {
        self.courses.is_empty() && self.sections.is_empty()
    }

    /// Sections scheduled in a term, in section id order.
    pub fn term_sections(&self, term_code: &str) -> impl Iterator<Item = &Section> {
        self.by_term
            .get(term_code)
            .into_iter()
            .flatten()
            .filter_map(|id| self.sections.get(id))
    }

    /// All sections of `course_code` in `term`, any state, ordered
    /// lexicographically by class label.
    pub fn sections_of(&self, term: &Term, course_code: &str) -> Result<Vec<&Section>, CatalogError> {
        if !self.courses.contains_key(course_code) {
            return Err(CatalogError::UnknownCourse(course_code.into()));
        }
        let mut found: Vec<&Section> = self
            .term_sections(term.term_code.as_str())
            .filter(|s| s.course_code.as_str() == course_code)
            .collect();
        found.sort_by(|a, b| {
            a.class_label
                .cmp(&b.class_label)
                .then_with(|| a.section_id.cmp(&b.section_id))
        });
        Ok(found)
    }

    /// Every course reachable through prerequisite edges, excluding `code`.
    pub fn prereq_closure(&self, code: &str) -> Result<BTreeSet<CourseCode>, CatalogError> {
        let start = self
            .courses
            .get(code)
            .ok_or_else(|| CatalogError::UnknownCourse(code.into()))?;
        let mut seen = BTreeSet::new();
        let mut queue: VecDeque<&CourseCode> = start.prerequisites.iter().collect();
        while let Some(next) = queue.pop_front() {
            if next == &start.code || !seen.insert(next.clone()) {
                continue;
            }
            if let Some(course) = self.courses.get(next) {
                queue.extend(course.prerequisites.iter());
            }
        }
        Ok(seen)
    }

    /// Writes both import files; `import_catalog` of the output reproduces `self`.
    pub fn export<W1: Write, W2: Write>(&self, courses: W1, sections: W2) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(courses);
        w.write_record(COURSES_HEADER)?;
        for c in self.courses.values() {
            let prereqs = c
                .prerequisites
                .iter()
                .map(CourseCode::as_str)
                .collect::<Vec<_>>()
                .join(";");
            w.write_record([c.code.as_str(), &c.title, &c.credits.to_string(), &prereqs])?;
        }
        w.flush()?;

        let mut w = csv::Writer::from_writer(sections);
        w.write_record(SECTIONS_HEADER)?;
        for s in self.sections.values() {
            let meetings = s
                .meetings
                .iter()
                .map(MeetingTime::to_string)
                .collect::<Vec<_>>()
                .join(";");
            w.write_record([
                s.section_id.as_str(),
                s.course_code.as_str(),
                &s.class_label,
                s.term_code.as_str(),
                &s.capacity.to_string(),
                &s.lecturer,
                &meetings,
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

impl CourseLookup for Catalog {
    fn course_of_section(&self, section_id: &SectionId) -> Option<&Course> {
        self.sections
            .get(section_id)
            .and_then(|s| self.courses.get(&s.course_code))
    }
}

fn check_prerequisites(courses: &BTreeMap<CourseCode, Course>, errors: &mut Vec<CatalogError>) {
    for c in courses.values() {
        for p in &c.prerequisites {
            if !courses.contains_key(p) {
                errors.push(CatalogError::UnknownPrereq {
                    course: c.code.clone(),
                    prereq: p.clone(),
                });
            }
        }
    }
    let graph: BTreeMap<CourseCode, BTreeSet<CourseCode>> = courses
        .values()
        .map(|c| (c.code.clone(), c.prerequisites.clone()))
        .collect();
    errors.extend(
        detect_cycles(&graph)
            .into_iter()
            .map(|cycle| CatalogError::PrereqCycle { cycle }),
    );
}

/// Reports every set of courses that sit on a common prerequisite cycle
/// (strongly connected components with a cycle, including self-loops).
///
/// The result is empty iff the relation admits a topological order. Each
/// group is sorted; groups are ordered by their smallest member. Edges to
/// unknown codes are ignored.
pub fn detect_cycles(draft: &BTreeMap<CourseCode, BTreeSet<CourseCode>>) -> Vec<Vec<CourseCode>> {
    let nodes: Vec<&CourseCode> = draft.keys().collect();
    let index: BTreeMap<&CourseCode, usize> = nodes.iter().enumerate().map(|(i, c)| (*c, i)).collect();
    let adj: Vec<Vec<usize>> = nodes
        .iter()
        .map(|c| draft[*c].iter().filter_map(|p| index.get(p).copied()).collect())
        .collect();

    let mut cycles: Vec<Vec<CourseCode>> = tarjan_scc(&adj)
        .into_iter()
        .filter(|comp| comp.len() > 1 || adj[comp[0]].contains(&comp[0]))
        .map(|comp| {
            let mut members: Vec<CourseCode> = comp.into_iter().map(|i| nodes[i].clone()).collect();
            members.sort();
            members
        })
        .collect();
    cycles.sort();
    cycles
}

/// Iterative Tarjan; returns components as node index lists.
fn tarjan_scc(adj: &[Vec<usize>]) -> Vec<Vec<usize>> {
    const UNSEEN: usize = usize::MAX;
    let n = adj.len();
    let mut index = vec![UNSEEN; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut out = Vec::new();
    let mut counter = 0;

    for root in 0..n {
        if index[root] != UNSEEN {
            continue;
        }
        // (node, next edge position)
        let mut work = vec![(root, 0usize)];
        index[root] = counter;
        low[root] = counter;
        counter += 1;
        stack.push(root);
        on_stack[root] = true;

        while let Some(&mut (v, ref mut pos)) = work.last_mut() {
            if let Some(&w) = adj[v].get(*pos) {
                *pos += 1;
                if index[w] == UNSEEN {
                    index[w] = counter;
                    low[w] = counter;
                    counter += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    work.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
                continue;
            }
            work.pop();
            if let Some(&(parent, _)) = work.last() {
                low[parent] = low[parent].min(low[v]);
            }
            if low[v] == index[v] {
                let mut comp = Vec::new();
                while let Some(w) = stack.pop() {
                    on_stack[w] = false;
                    comp.push(w);
                    if w == v {
                        break;
                    }
                }
                out.push(comp);
            }
        }
    }
    out
}

fn reader<R: Read>(source: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(source)
}

fn check_header(
    rdr: &mut csv::Reader<impl Read>,
    file: SourceFile,
    expected: &[&str],
    errors: &mut Vec<CatalogError>,
) -> bool {
    match rdr.headers() {
        Ok(h) if h.is_empty() => true,
        Ok(h) if h.iter().eq(expected.iter().copied()) => true,
        Ok(h) => {
            errors.push(CatalogError::ParseError {
                file,
                line: 1,
                message: format!(
                    "header must be `{}`, found `{}`",
                    expected.join(","),
                    h.iter().collect::<Vec<_>>().join(",")
                ),
            });
            false
        }
        Err(e) => {
            errors.push(CatalogError::ParseError {
                file,
                line: 1,
                message: e.to_string(),
            });
            false
        }
    }
}

fn split_list(raw: &str) -> impl Iterator<Item = &str> {
    raw.split(';').map(str::trim).filter(|s| !s.is_empty())
}

/// Parses and validates both catalog files.
pub fn import_catalog<C: Read, S: Read>(courses: C, sections: S) -> Result<Catalog, Vec<CatalogError>> {
    let mut errors = Vec::new();

    let mut drafts: Vec<(u64, CourseCode, String, u32, BTreeSet<CourseCode>)> = Vec::new();
    let mut rdr = reader(courses);
    if check_header(&mut rdr, SourceFile::Courses, &COURSES_HEADER, &mut errors) {
        for row in rdr.records() {
            let row = match row {
                Ok(r) => r,
                Err(e) => {
                    let line = e.position().map_or(0, |p| p.line());
                    errors.push(CatalogError::ParseError {
                        file: SourceFile::Courses,
                        line,
                        message: e.to_string(),
                    });
                    continue;
                }
            };
            let line = row.position().map_or(0, |p| p.line());
            let parse_err = |message: String| CatalogError::ParseError {
                file: SourceFile::Courses,
                line,
                message,
            };
            if row.len() != COURSES_HEADER.len() {
                errors.push(parse_err(format!(
                    "expected {} fields, found {}",
                    COURSES_HEADER.len(),
                    row.len()
                )));
                continue;
            }
            let code = CourseCode::from(&row[0]);
            if code.as_str().is_empty() {
                errors.push(parse_err("course code is empty".into()));
                continue;
            }
            let credits = match row[2].parse::<u32>() {
                Ok(c) => c,
                Err(_) => {
                    errors.push(parse_err(format!("credits {:?} is not a non-negative integer", &row[2])));
                    continue;
                }
            };
            let prereqs = split_list(&row[3]).map(CourseCode::from).collect();
            drafts.push((line, code, row[1].to_owned(), credits, prereqs));
        }
    }

    // Cycles (including self-loops) are reported from the raw graph so that a
    // self-listed prerequisite surfaces as PREREQ_CYCLE, not a construction error.
    let mut seen = BTreeSet::new();
    let mut graph: BTreeMap<CourseCode, BTreeSet<CourseCode>> = BTreeMap::new();
    let mut course_list = Vec::new();
    for (line, code, title, credits, prereqs) in drafts {
        if !seen.insert(code.clone()) {
            errors.push(CatalogError::DuplicateCode {
                value: code.to_string(),
            });
            continue;
        }
        graph.insert(code.clone(), prereqs.clone());
        let without_self: BTreeSet<CourseCode> = prereqs.iter().filter(|p| **p != code).cloned().collect();
        match Course::new(code, title, credits, without_self) {
            Ok(c) => course_list.push(c),
            Err(e) => errors.push(CatalogError::ParseError {
                file: SourceFile::Courses,
                line,
                message: e.to_string(),
            }),
        }
    }
    for (code, prereqs) in &graph {
        for p in prereqs {
            if !graph.contains_key(p) {
                errors.push(CatalogError::UnknownPrereq {
                    course: code.clone(),
                    prereq: p.clone(),
                });
            }
        }
    }
    errors.extend(
        detect_cycles(&graph)
            .into_iter()
            .map(|cycle| CatalogError::PrereqCycle { cycle }),
    );

    let mut section_list = Vec::new();
    let mut seen_sections = BTreeSet::new();
    let mut rdr = reader(sections);
    if check_header(&mut rdr, SourceFile::Sections, &SECTIONS_HEADER, &mut errors) {
        for row in rdr.records() {
            let row = match row {
                Ok(r) => r,
                Err(e) => {
                    let line = e.position().map_or(0, |p| p.line());
                    errors.push(CatalogError::ParseError {
                        file: SourceFile::Sections,
                        line,
                        message: e.to_string(),
                    });
                    continue;
                }
            };
            let line = row.position().map_or(0, |p| p.line());
            let parse_err = |message: String| CatalogError::ParseError {
                file: SourceFile::Sections,
                line,
                message,
            };
            if row.len() != SECTIONS_HEADER.len() {
                errors.push(parse_err(format!(
                    "expected {} fields, found {}",
                    SECTIONS_HEADER.len(),
                    row.len()
                )));
                continue;
            }
            let term = match TermCode::parse(&row[3]) {
                Ok(t) => t,
                Err(e) => {
                    errors.push(parse_err(e.to_string()));
                    continue;
                }
            };
            let capacity = match row[4].parse::<u32>() {
                Ok(c) => c,
                Err(_) => {
                    errors.push(parse_err(format!("capacity {:?} is not a non-negative integer", &row[4])));
                    continue;
                }
            };
            let meetings: Result<Vec<MeetingTime>, _> = split_list(&row[6]).map(str::parse).collect();
            let meetings = match meetings {
                Ok(m) => m,
                Err(e) => {
                    errors.push(parse_err(e.to_string()));
                    continue;
                }
            };
            let course_code = CourseCode::from(&row[1]);
            if !graph.contains_key(&course_code) {
                errors.push(CatalogError::UnknownCourse(course_code.clone()));
            }
            if !seen_sections.insert(row[0].to_owned()) {
                errors.push(CatalogError::DuplicateCode {
                    value: row[0].to_owned(),
                });
                continue;
            }
            match Section::new(&row[0], course_code, &row[2], term, capacity, meetings, &row[5]) {
                Ok(s) => section_list.push(s),
                Err(e) => errors.push(parse_err(e.to_string())),
            }
        }
    }

    if !errors.is_empty() {
        return Err(errors);
    }
    Catalog::from_parts(course_list, section_list)
}
