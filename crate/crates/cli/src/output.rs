//! Aligned text by default, JSON with `--json`.

use chrono::FixedOffset;
use krs_core::{AuditEntry, DecisionOutcome, DemandRow, StudentProfile, Term, Timestamp};
use serde::Serialize;

pub struct Out {
    json: bool,
    tz: FixedOffset,
}

impl Out {
    pub fn new(json: bool, tz: FixedOffset) -> Self {
        Self { json, tz }
    }

    fn when(&self, at: Timestamp) -> String {
        at.with_timezone(&self.tz).to_rfc3339_opts(chrono::SecondsFormat::AutoSi, false)
    }

    fn emit<T: Serialize>(&self, value: &T) {
        println!("{}", serde_json::to_string_pretty(value).expect("serializable"));
    }

    pub fn line(&self, text: &str, json: impl FnOnce() -> serde_json::Value) {
        if self.json {
            self.emit(&json());
        } else {
            println!("{text}");
        }
    }

    pub fn term(&self, term: &Term) {
        if self.json {
            return self.emit(term);
        }
        let window = |w: &krs_core::Window| format!("{} .. {}", self.when(w.open_at), self.when(w.close_at));
        println!("{:<16}{}", "term", term.term_code);
        println!("{:<16}{}", "registration", window(&term.registration_window));
        println!("{:<16}{}", "payment", window(&term.payment_window));
        println!("{:<16}{}", "add", term.add_window.as_ref().map_or_else(|| "-".into(), window));
        println!("{:<16}{}", "min_enrollment", term.min_enrollment);
    }

    pub fn profile(&self, p: &StudentProfile) {
        if self.json {
            return self.emit(p);
        }
        println!("{:<16}{}", "nim", p.nim);
        println!("{:<16}{}", "name", p.name);
        println!("{:<16}{}", "credit_cap", p.credit_cap);
        println!("{:<16}{}", "permit", p.over_credit_permit);
        println!("{:<16}{:?}", "financial", p.financial_status);
        println!("{:<16}{:?}", "case", p.case_status);
    }

    pub fn demand(&self, rows: &[DemandRow]) {
        if self.json {
            return self.emit(&rows);
        }
        println!(
            "{:<8} {:<12} {:<5} {:>8} {:>8} {:>6} {:<5} {}",
            "COURSE", "SECTION", "CLASS", "ENROLLED", "CAPACITY", "FILL", "BELOW", "STATE"
        );
        for r in rows {
            println!(
                "{:<8} {:<12} {:<5} {:>8} {:>8} {:>5.1}% {:<5} {}",
                r.course_code,
                r.section_id,
                r.class_label,
                r.enrolled,
                r.capacity,
                r.fill_ratio * 100.0,
                if r.below_threshold { "yes" } else { "no" },
                r.state
            );
        }
    }

    pub fn decision(&self, o: &DecisionOutcome) {
        if self.json {
            return self.emit(o);
        }
        println!("section {} is now {}", o.section_id, o.state);
        if !o.affected.is_empty() || o.announcement_id.is_some() {
            println!(
                "{} lines cancelled, {} notifications sent, announcement #{}",
                o.affected.len(),
                o.notifications,
                o.announcement_id.unwrap_or(0)
            );
        }
    }

    pub fn audit(&self, entries: &[AuditEntry]) {
        if self.json {
            return self.emit(&entries);
        }
        for e in entries {
            let payload = serde_json::to_value(&e.event).expect("serializable");
            println!(
                "{:>6}  {}  {:<10} {:<18} {}",
                e.seq,
                self.when(e.at),
                e.actor,
                e.event.action(),
                payload.get("payload").map(|p| p.to_string()).unwrap_or_default()
            );
        }
    }
}
