//! Plain-text KRS (study plan card) rendering.

use std::fmt::Write as _;

use chrono::{Datelike, FixedOffset, Timelike};
use serde::{Deserialize, Serialize};

use super::AuditEvent;
use crate::catalog::Catalog;
use crate::domain::{
    active_credits, AcademicRecord, CaseStatus, CourseLookup, FinancialStatus, LineStatus, RegistrationPlan,
    StudentProfile, TermCode, Timestamp,
};
use crate::engine::{Engine, EngineError, PlanKey};

const MONTHS: [&str; 12] = [
    "Januari",
    "Februari",
    "Maret",
    "April",
    "Mei",
    "Juni",
    "Juli",
    "Agustus",
    "September",
    "Oktober",
    "November",
    "Desember",
];

/// `DD Month YYYY HH:MM:SS` in the given offset, e.g. `25 Februari 2008 17:17:01`.
pub fn format_timestamp(at: Timestamp, tz: FixedOffset) -> String {
    let local = at.with_timezone(&tz);
    format!(
        "{:02} {} {} {:02}:{:02}:{:02}",
        local.day(),
        MONTHS[local.month0() as usize],
        local.year(),
        local.hour(),
        local.minute(),
        local.second()
    )
}

fn term_label(term: &TermCode) -> String {
    let year = term.year();
    format!("Semester {} {}/{}", term.semester(), year, year + 1)
}

fn status_label(status: LineStatus) -> &'static str {
    match status {
        LineStatus::Planned => "-",
        LineStatus::Added => "Tambah",
        LineStatus::Withdrawn => "Mundur",
        LineStatus::Cancelled => "Batal",
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KrsDocument {
    pub text: String,
    pub print_count: u32,
    pub course_count: usize,
    pub total_credits: u32,
}

/// Renders the card. Withdrawn and cancelled lines are listed with their
/// status and their SKS in parentheses; they do not enter the recap.
pub fn render_document(
    catalog: &Catalog,
    profile: &StudentProfile,
    record: &AcademicRecord,
    plan: &RegistrationPlan,
    at: Timestamp,
    tz: FixedOffset,
) -> Result<KrsDocument, EngineError> {
    let when = format_timestamp(at, tz);
    let total_credits = active_credits(plan, catalog)?;
    let course_count = plan.active_lines().count();
    let mut out = String::new();
    let w = &mut out;

    let _ = writeln!(w, "Kartu Rencana Studi Mahasiswa, per {when}");
    let _ = writeln!(w, "{}", term_label(&plan.term_code));
    let _ = writeln!(w);
    let _ = writeln!(w, "Data Mahasiswa");
    let _ = writeln!(w, "NIM / Nama        : {} / {}", profile.nim, profile.name);
    let _ = writeln!(w, "Program Studi     : {}", profile.program);
    let _ = writeln!(
        w,
        "IP/ SKS Lulus     : {}/{}",
        record.ip.as_deref().unwrap_or(""),
        record.credits_passed
    );
    let _ = writeln!(
        w,
        "IPK/ SKS Total    : {}/{}",
        record.ipk.as_deref().unwrap_or(""),
        record.credits_total
    );
    let _ = writeln!(w);
    let _ = writeln!(w, "Status berkaitan dengan pendaftaran per {when}");
    let financial = match profile.financial_status {
        FinancialStatus::Clear => "Lunas",
        FinancialStatus::Hold => "Ditahan",
    };
    let _ = writeln!(
        w,
        "Status keuangan   : {financial} (dengan maksimum pengambilan {} SKS)",
        profile.credit_cap
    );
    let _ = writeln!(
        w,
        "Status kasus      : {}",
        match profile.case_status {
            CaseStatus::None => "Tidak ada",
            CaseStatus::Hold => "Ada",
        }
    );
    let _ = writeln!(
        w,
        "Surat SKS lebih   : {}",
        if profile.over_credit_permit { "Ada" } else { "Tidak ada" }
    );
    let _ = writeln!(w);
    let _ = writeln!(w, "RENCANA STUDI");
    let _ = writeln!(w, "{:<4} {:<8} {:<40} {:<7} {:<5} {:>4}", "No.", "KD MK", "NAMA MATA KULIAH", "STATUS", "KELAS", "SKS");
    for (i, line) in plan.lines.iter().enumerate() {
        let section = catalog.section(line.section_id.as_str());
        let course = catalog.course_of_section(&line.section_id);
        let (code, title, credits) = match course {
            Some(c) => (c.code.as_str(), c.title.as_str(), c.credits),
            None => (line.section_id.as_str(), "?", 0),
        };
        let sks = if line.status.is_active() {
            credits.to_string()
        } else {
            format!("({credits})")
        };
        let _ = writeln!(
            w,
            "{:<4} {:<8} {:<40} {:<7} {:<5} {:>4}",
            format!("{}.", i + 1),
            code,
            title,
            status_label(line.status),
            section.map_or("", |s| s.class_label.as_str()),
            sks
        );
    }
    let _ = writeln!(w);
    let _ = writeln!(w, "REKAPITULASI RENCANA STUDI");
    let _ = writeln!(w, "Jumlah mata kuliah : {course_count}");
    let _ = writeln!(w, "Jumlah SKS : {total_credits}");
    let _ = writeln!(w);
    let _ = writeln!(w, "Cetakan ke-{}", plan.print_count);

    Ok(KrsDocument {
        text: out,
        print_count: plan.print_count,
        course_count,
        total_credits,
    })
}

impl Engine {
    /// Renders the KRS and bumps the print counter by one (audited as
    /// `PlanPrinted`).
    pub fn render_krs(&self, nim: &str, term_code: &str, at: Timestamp) -> Result<KrsDocument, EngineError> {
        let inner = self.read();
        let unknown = || EngineError::UnknownPlan {
            nim: nim.to_owned(),
            term: term_code.to_owned(),
        };
        let (nim_key, profile) = inner.profiles.get_key_value(nim).ok_or_else(unknown)?;
        let term_key = inner.terms.get_key_value(term_code).map(|(k, _)| k.clone()).ok_or_else(unknown)?;
        let record = inner
            .records
            .get(nim)
            .cloned()
            .unwrap_or_else(|| AcademicRecord::empty(nim_key.clone()));
        let handle = inner.plan_handle_or_create(&PlanKey::new(nim_key.clone(), term_key.clone()));
        let mut plan = handle.lock();
        let print_count = plan.print_count + 1;
        let mut preview = plan.clone();
        preview.print_count = print_count;
        let doc = render_document(&inner.catalog, profile, &record, &preview, at, self.config().timezone)?;
        self.append_audit(
            nim_key.as_str(),
            at,
            AuditEvent::PlanPrinted {
                nim: nim_key.clone(),
                term_code: term_key,
                print_count,
            },
        )?;
        plan.print_count = print_count;
        Ok(doc)
    }
}
