//! `krs`: administration of a registration state directory.
//!
//! Exit codes: 0 success, 1 usage, 2 validation, 3 I/O (including a state
//! directory locked by a running server).

mod args;
mod output;
mod time;

use std::fs::File;
use std::path::Path;
use std::process::ExitCode;

use clap::Parser;
use krs_core::people::import_people;
use krs_core::{
    import_catalog, Account, CaseStatus, Catalog, CatalogError, Engine, EngineError, FileStore, FinancialStatus,
    StoreError, Term, TermCode, Timestamp, Window,
};
use krs_service::Config;

use args::{AccountCmd, CatalogCmd, Cli, Command, HoldKind, SectionCmd, StudentCmd, TermCmd, WindowKind};
use output::Out;

#[derive(Debug)]
enum CliError {
    Usage(String),
    Validation(String),
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Validation(_) => 2,
            CliError::Io(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Validation(m) | CliError::Io(m) => m,
        }
    }
}

impl From<EngineError> for CliError {
    fn from(e: EngineError) -> Self {
        match e {
            EngineError::Store(_) => CliError::Io(e.to_string()),
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<StoreError> for CliError {
    fn from(e: StoreError) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

type Result<T, E = CliError> = std::result::Result<T, E>;

struct Ctx {
    config: Config,
    out: Out,
    actor: String,
    now: Option<Timestamp>,
}

impl Ctx {
    fn now(&self) -> Timestamp {
        self.now.unwrap_or_else(chrono::Utc::now)
    }

    fn instant(&self, raw: &str) -> Result<Timestamp> {
        time::parse_instant(raw, self.config.timezone).map_err(CliError::Usage)
    }

    fn engine(&self) -> Result<Engine> {
        Ok(krs_service::open_engine(&self.config)?)
    }
}

fn open_input(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn parse_catalog(courses: &Path, sections: &Path) -> Result<Catalog> {
    import_catalog(open_input(courses)?, open_input(sections)?).map_err(|errors| {
        CliError::Validation(errors.iter().map(CatalogError::to_string).collect::<Vec<_>>().join("\n"))
    })
}

fn term_code(raw: &str) -> Result<TermCode> {
    TermCode::parse(raw).map_err(|e| CliError::Usage(e.to_string()))
}

fn window(ctx: &Ctx, open: &str, close: &str) -> Result<Window> {
    Window::new(ctx.instant(open)?, ctx.instant(close)?).map_err(|e| CliError::Validation(e.to_string()))
}

fn run(cli: Cli) -> Result<()> {
    let mut config = Config::from_env(cli.config.as_deref()).map_err(|e| CliError::Usage(e.to_string()))?;
    if let Some(dir) = &cli.dir {
        config.state_dir = dir.clone();
    }
    let now = cli
        .now
        .as_deref()
        .map(|raw| time::parse_instant(raw, config.timezone))
        .transpose()
        .map_err(CliError::Usage)?;
    let ctx = Ctx {
        out: Out::new(cli.json, config.timezone),
        config,
        actor: cli.actor,
        now,
    };

    match cli.command {
        Command::Init => {
            let dir = &ctx.config.state_dir;
            FileStore::init(dir)?;
            ctx.out.line(&format!("initialized {}", dir.display()), || serde_json::json!({ "state_dir": dir }));
        }
        Command::Serve { listen } => {
            let mut config = ctx.config.clone();
            if let Some(addr) = listen {
                config.listen = addr;
            }
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(krs_service::serve(config)).map_err(|e| match e {
                krs_service::ServeError::Engine(e) => CliError::from(e),
                other => CliError::Io(other.to_string()),
            })?;
        }
        Command::Term(cmd) => term(&ctx, cmd)?,
        Command::Catalog(cmd) => catalog(&ctx, cmd)?,
        Command::Student(cmd) => student(&ctx, cmd)?,
        Command::Account(AccountCmd::Add { principal, role, password }) => {
            let engine = ctx.engine()?;
            engine.upsert_account(Account::new(principal.clone(), role, &password))?;
            ctx.out.line(&format!("account {principal} ({role:?}) saved"), || {
                serde_json::json!({ "principal": principal, "role": role })
            });
        }
        Command::Demand { term, below_threshold } => {
            let engine = ctx.engine()?;
            let rows: Vec<_> = engine
                .demand_report(term_code(&term)?.as_str())?
                .into_iter()
                .filter(|r| !below_threshold || r.below_threshold)
                .collect();
            ctx.out.demand(&rows);
        }
        Command::Section(cmd) => {
            let (id, decision) = match cmd {
                SectionCmd::Cancel { id } => (id, krs_core::Decision::Cancel),
                SectionCmd::Confirm { id } => (id, krs_core::Decision::Confirm),
            };
            let engine = ctx.engine()?;
            let outcome = engine.decide_section(&id, decision, &ctx.actor, ctx.now())?;
            ctx.out.decision(&outcome);
        }
        Command::Audit(args::AuditCmd::Tail { n }) => {
            let engine = ctx.engine()?;
            let entries = engine.audit_entries()?;
            let start = entries.len().saturating_sub(n);
            ctx.out.audit(&entries[start..]);
        }
    }
    Ok(())
}

fn term(ctx: &Ctx, cmd: TermCmd) -> Result<()> {
    match cmd {
        TermCmd::Create {
            code,
            reg_open,
            reg_close,
            pay_open,
            pay_close,
            add_open,
            add_close,
            min_enroll,
        } => {
            let registration = window(ctx, &reg_open, &reg_close)?;
            let payment = match (pay_open, pay_close) {
                (Some(o), Some(c)) => window(ctx, &o, &c)?,
                (None, None) => registration,
                _ => return Err(CliError::Usage("--pay-open and --pay-close go together".into())),
            };
            let mut term = Term::new(term_code(&code)?, registration, payment, min_enroll);
            term.add_window = match (add_open, add_close) {
                (Some(o), Some(c)) => Some(window(ctx, &o, &c)?),
                (None, None) => None,
                _ => return Err(CliError::Usage("--add-open and --add-close go together".into())),
            };
            let engine = ctx.engine()?;
            if engine.term(term.term_code.as_str()).is_some() {
                return Err(CliError::Validation(format!("term {} already exists", term.term_code)));
            }
            engine.upsert_term(term.clone())?;
            ctx.out.term(&term);
        }
        TermCmd::Show { code } => {
            let engine = ctx.engine()?;
            let term = engine
                .term(term_code(&code)?.as_str())
                .ok_or_else(|| CliError::Validation(format!("UNKNOWN_TERM: {code}")))?;
            ctx.out.term(&term);
        }
        TermCmd::SetWindow { code, kind, open, close } => {
            let engine = ctx.engine()?;
            let mut term = engine
                .term(term_code(&code)?.as_str())
                .ok_or_else(|| CliError::Validation(format!("UNKNOWN_TERM: {code}")))?;
            let w = window(ctx, &open, &close)?;
            match kind {
                WindowKind::Registration => term.registration_window = w,
                WindowKind::Payment => term.payment_window = w,
                WindowKind::Add => term.add_window = Some(w),
            }
            engine.upsert_term(term.clone())?;
            ctx.out.term(&term);
        }
    }
    Ok(())
}

fn catalog(ctx: &Ctx, cmd: CatalogCmd) -> Result<()> {
    match cmd {
        CatalogCmd::Import { courses, sections } => {
            let catalog = parse_catalog(&courses, &sections)?;
            let (c, s) = (catalog.course_count(), catalog.section_count());
            ctx.engine()?.import_catalog(catalog)?;
            ctx.out.line(&format!("{c} courses, {s} sections imported"), || {
                serde_json::json!({ "courses": c, "sections": s })
            });
        }
        CatalogCmd::Validate { courses, sections } => {
            let catalog = parse_catalog(&courses, &sections)?;
            let (c, s) = (catalog.course_count(), catalog.section_count());
            ctx.out.line(&format!("{c} courses, {s} sections valid"), || {
                serde_json::json!({ "courses": c, "sections": s, "valid": true })
            });
        }
    }
    Ok(())
}

fn student(ctx: &Ctx, cmd: StudentCmd) -> Result<()> {
    let engine = ctx.engine()?;
    let now = ctx.now();
    let profile = match cmd {
        StudentCmd::Import { students, records } => {
            let catalog = engine.catalog();
            let records = records.as_deref().map(open_input).transpose()?;
            let people = import_people(open_input(&students)?, records, &catalog).map_err(|errors| {
                CliError::Validation(errors.iter().map(ToString::to_string).collect::<Vec<_>>().join("\n"))
            })?;
            let (p, r) = (people.profiles.len(), people.records.len());
            engine.import_students(people.profiles, people.records, people.accounts)?;
            ctx.out.line(&format!("{p} students, {r} academic records imported"), || {
                serde_json::json!({ "students": p, "records": r })
            });
            return Ok(());
        }
        StudentCmd::SetCap { nim, cap } => engine.update_profile(&ctx.actor, now, &nim, |p| p.credit_cap = cap)?,
        StudentCmd::SetPermit { nim, value } => {
            engine.update_profile(&ctx.actor, now, &nim, |p| p.over_credit_permit = value.get())?
        }
        StudentCmd::SetHold { nim, kind, value } => engine.update_profile(&ctx.actor, now, &nim, |p| match kind {
            HoldKind::Financial => {
                p.financial_status = if value.get() { FinancialStatus::Hold } else { FinancialStatus::Clear }
            }
            HoldKind::Case => p.case_status = if value.get() { CaseStatus::Hold } else { CaseStatus::None },
        })?,
    };
    ctx.out.profile(&profile);
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("krs: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}
