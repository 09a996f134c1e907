use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use krs_core::Role;

#[derive(Debug, Parser)]
#[command(name = "krs", version, about = "Course registration administration", next_display_order = None)]
pub struct Cli {
    /// State directory (overrides the config file and KRS_STATE_DIR).
    #[arg(long, global = true)]
    pub dir: Option<PathBuf>,
    /// TOML configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Print structured JSON instead of aligned text.
    #[arg(long, global = true)]
    pub json: bool,
    /// Staff id recorded in the audit log for changes made by this command.
    #[arg(long, global = true, default_value = "admin")]
    pub actor: String,
    /// Use this instant instead of the wall clock (ISO-8601).
    #[arg(long, global = true)]
    pub now: Option<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Create the state directory layout.
    Init,
    /// Run the HTTP API until interrupted.
    Serve {
        #[arg(long)]
        listen: Option<String>,
    },
    /// Create terms and move their windows.
    #[command(subcommand)]
    Term(TermCmd),
    /// Import or check course and section files.
    #[command(subcommand)]
    Catalog(CatalogCmd),
    /// Student import and per-student overrides.
    #[command(subcommand)]
    Student(StudentCmd),
    /// Login accounts for staff and lecturers.
    #[command(subcommand)]
    Account(AccountCmd),
    /// Enrollment per section of a term.
    Demand {
        term: String,
        /// Only sections below the term's minimum enrollment.
        #[arg(long)]
        below_threshold: bool,
    },
    /// Run or cancel an offered section.
    #[command(subcommand)]
    Section(SectionCmd),
    /// Inspect the audit log.
    #[command(subcommand)]
    Audit(AuditCmd),
}

#[derive(Debug, Subcommand)]
pub enum TermCmd {
    Create {
        code: String,
        #[arg(long)]
        reg_open: String,
        #[arg(long)]
        reg_close: String,
        /// Defaults to the registration window.
        #[arg(long)]
        pay_open: Option<String>,
        #[arg(long)]
        pay_close: Option<String>,
        #[arg(long)]
        add_open: Option<String>,
        #[arg(long)]
        add_close: Option<String>,
        #[arg(long, default_value_t = krs_core::DEFAULT_MIN_ENROLLMENT)]
        min_enroll: u32,
    },
    Show {
        code: String,
    },
    SetWindow {
        code: String,
        #[arg(value_enum)]
        kind: WindowKind,
        #[arg(long)]
        open: String,
        #[arg(long)]
        close: String,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum WindowKind {
    Registration,
    Payment,
    Add,
}

#[derive(Debug, Subcommand)]
pub enum CatalogCmd {
    /// Replace the catalog with the given files.
    Import {
        #[arg(long)]
        courses: PathBuf,
        #[arg(long)]
        sections: PathBuf,
    },
    /// Check the files without touching any state.
    Validate {
        #[arg(long)]
        courses: PathBuf,
        #[arg(long)]
        sections: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Switch {
    #[value(alias = "true", alias = "yes")]
    On,
    #[value(alias = "false", alias = "no")]
    Off,
}

impl Switch {
    pub fn get(self) -> bool {
        matches!(self, Switch::On)
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum HoldKind {
    Financial,
    Case,
}

#[derive(Debug, Subcommand)]
pub enum StudentCmd {
    /// Load students (and optionally their academic records).
    Import {
        #[arg(long)]
        students: PathBuf,
        #[arg(long)]
        records: Option<PathBuf>,
    },
    /// Maximum SKS per term.
    SetCap {
        nim: String,
        cap: u32,
    },
    /// Permission to exceed the credit cap.
    SetPermit {
        nim: String,
        #[arg(value_enum)]
        value: Switch,
    },
    SetHold {
        nim: String,
        #[arg(value_enum)]
        kind: HoldKind,
        #[arg(value_enum)]
        value: Switch,
    },
}

#[derive(Debug, Subcommand)]
pub enum AccountCmd {
    Add {
        principal: String,
        #[arg(long)]
        role: Role,
        #[arg(long)]
        password: String,
    },
}

#[derive(Debug, Subcommand)]
pub enum SectionCmd {
    /// Cancel and notify every registered student.
    Cancel { id: String },
    Confirm { id: String },
}

#[derive(Debug, Subcommand)]
pub enum AuditCmd {
    /// Print the most recent entries.
    Tail {
        #[arg(short, default_value_t = 20)]
        n: usize,
    },
}
