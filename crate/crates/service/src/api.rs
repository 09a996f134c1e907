//! `/api/v1` routes.

use std::sync::Arc;

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{delete, get, post};
use axum::{Json, Router};
use krs_core::store::{Announcement, Notification};
use krs_core::{
    AddRequest, CourseLookup, Decision, DecisionOutcome, DemandRow, Engine, LineStatus, Nim, PlanLine, SectionId,
    SectionState, Term, TermCode, Timestamp, ViolationCode,
};
use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::access::{permits, Access};
use crate::clock::Clock;
use crate::error::ApiError;
use crate::sessions::{Session, SessionStore};

#[derive(Clone)]
pub struct AppState {
    pub engine: Arc<Engine>,
    pub sessions: Arc<SessionStore>,
    pub clock: Arc<dyn Clock>,
}

impl AppState {
    pub fn new(engine: Arc<Engine>, sessions: SessionStore, clock: Arc<dyn Clock>) -> Self {
        Self {
            engine,
            sessions: Arc::new(sessions),
            clock,
        }
    }

    fn now(&self) -> Timestamp {
        self.clock.now()
    }

    fn authenticate(&self, headers: &HeaderMap) -> Result<Session, ApiError> {
        let value = headers
            .get(header::AUTHORIZATION)
            .ok_or_else(|| ApiError::Unauthorized("missing Authorization header".into()))?;
        let token = value
            .to_str()
            .ok()
            .and_then(|v| v.strip_prefix("Bearer "))
            .map(str::trim)
            .ok_or_else(|| ApiError::Unauthorized("expected a Bearer token".into()))?;
        self.sessions
            .authorize(token, self.now())
            .ok_or_else(|| ApiError::Unauthorized("invalid or expired session".into()))
    }

    fn authorize(&self, headers: &HeaderMap, access: Access<'_>) -> Result<Session, ApiError> {
        let session = self.authenticate(headers)?;
        if permits(&session, access) {
            Ok(session)
        } else {
            Err(ApiError::Forbidden(format!("{:?} may not access this resource", session.role)))
        }
    }

    /// The term whose change window contains now, else the latest defined term.
    fn current_term(&self) -> Result<Term, ApiError> {
        let now = self.now();
        let terms = self.engine.terms();
        terms
            .iter()
            .filter(|t| t.accepts_changes_at(now))
            .max_by(|a, b| a.term_code.cmp(&b.term_code))
            .or_else(|| terms.iter().max_by(|a, b| a.term_code.cmp(&b.term_code)))
            .cloned()
            .ok_or_else(|| ApiError::NotFound("no term is defined".into()))
    }

    fn resolve_term(&self, requested: Option<&str>) -> Result<Term, ApiError> {
        match requested {
            Some(code) => self
                .engine
                .term(code)
                .ok_or_else(|| ApiError::NotFound(format!("UNKNOWN_TERM: {code}"))),
            None => self.current_term(),
        }
    }
}

/// Runs engine work off the async executor: commits fsync the audit log.
async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, ApiError> + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::Internal(format!("worker failed: {e}")))?
}

fn body<T>(payload: Result<Json<T>, JsonRejection>) -> Result<T, ApiError> {
    payload
        .map(|Json(v)| v)
        .map_err(|e| ApiError::Unprocessable(e.body_text()))
}

fn query<T: DeserializeOwned>(q: Result<Query<T>, QueryRejection>) -> Result<T, ApiError> {
    q.map(|Query(v)| v).map_err(|e| ApiError::Unprocessable(e.body_text()))
}

pub fn router(state: AppState) -> Router {
    let api = Router::new()
        .route("/sessions", post(login))
        .route("/terms/current", get(current_term))
        .route("/catalog/courses", get(list_courses))
        .route("/catalog/courses/{code}/sections", get(list_sections))
        .route("/students/{nim}/plan", get(get_plan))
        .route("/students/{nim}/plan/lines", post(add_line))
        .route("/students/{nim}/plan/lines/{section_id}", delete(withdraw_line))
        .route("/students/{nim}/plan/document", get(render_document))
        .route("/staff/demand", get(demand))
        .route("/staff/sections/{id}/decision", post(decide))
        .route("/announcements", get(list_announcements).post(post_announcement))
        .route("/sections/{id}/roster", get(roster));
    Router::new()
        .nest("/api/v1", api)
        .fallback(|| async { ApiError::NotFound("no such endpoint".into()) })
        .with_state(state)
}

#[derive(Debug, Deserialize)]
struct LoginBody {
    principal: String,
    password: String,
}

async fn login(
    State(state): State<AppState>,
    payload: Result<Json<LoginBody>, JsonRejection>,
) -> Result<(StatusCode, Json<Session>), ApiError> {
    let LoginBody { principal, password } = body(payload)?;
    let account = state
        .engine
        .verify_login(&principal, &password)
        .ok_or_else(|| ApiError::Unauthorized("unknown principal or wrong password".into()))?;
    let now = state.now();
    let engine = state.engine.clone();
    let acct = account.clone();
    blocking(move || Ok(engine.record_login(&acct, now)?)).await?;
    let session = state.sessions.issue(&account.principal, account.role, now);
    Ok((StatusCode::CREATED, Json(session)))
}

async fn current_term(State(state): State<AppState>, headers: HeaderMap) -> Result<Json<Term>, ApiError> {
    state.authorize(&headers, Access::Public)?;
    Ok(Json(state.current_term()?))
}

#[derive(Debug, Deserialize)]
struct TermQuery {
    term: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CourseView {
    pub code: String,
    pub title: String,
    pub credits: u32,
    pub prerequisites: Vec<String>,
}

async fn list_courses(
    State(state): State<AppState>,
    headers: HeaderMap,
    q: Result<Query<TermQuery>, QueryRejection>,
) -> Result<Json<Vec<CourseView>>, ApiError> {
    state.authorize(&headers, Access::Public)?;
    let q = query(q)?;
    let catalog = state.engine.catalog();
    let term = q.term.as_deref().map(|t| state.resolve_term(Some(t))).transpose()?;
    let offered = |code: &str| match &term {
        None => true,
        Some(t) => catalog.term_sections(t.term_code.as_str()).any(|s| s.course_code.as_str() == code),
    };
    Ok(Json(
        catalog
            .courses()
            .filter(|c| offered(c.code.as_str()))
            .map(|c| CourseView {
                code: c.code.to_string(),
                title: c.title.clone(),
                credits: c.credits,
                prerequisites: c.prerequisites.iter().map(ToString::to_string).collect(),
            })
            .collect(),
    ))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SectionView {
    pub section_id: String,
    pub course_code: String,
    pub class_label: String,
    pub term_code: String,
    pub lecturer: String,
    pub meetings: Vec<String>,
    pub capacity: u32,
    pub enrolled: u32,
    pub state: SectionState,
}

async fn list_sections(
    State(state): State<AppState>,
    headers: HeaderMap,
    Path(code): Path<String>,
    q: Result<Query<TermQuery>, QueryRejection>,
) -> Result<Json<Vec<SectionView>>, ApiError> {
    state.authorize(&headers, Access::Public)?;
    let q = query(q)?;
    let catalog = state.engine.catalog();
    if catalog.course(&code).is_none() {
        return Err(ApiError::NotFound(format!("UNKNOWN_COURSE: {code}")));
    }
    let sections = match q.term.as_deref() {
        Some(t) => {
            let term = state.resolve_term(Some(t))?;
            catalog
                .sections_of(&term, &code)
                .map_err(|e| ApiError::NotFound(e.to_string()))?
        }
        None => {
            let mut all: Vec<_> = catalog.sections().filter(|s| s.course_code.as_str() == code).collect();
            all.sort_by(|a, b| (&a.term_code, &a.class_label).cmp(&(&b.term_code, &b.class_label)));
            all
        }
    };
    Ok(Json(
        sections
            .into_iter()
            .map(|s| {
                let seats = state.engine.seat_status(s.section_id.as_str());
                SectionView {
                    section_id: s.section_id.to_string(),
                    course_code: s.course_code.to_string(),
                    class_label: s.class_label.clone(),
                    term_code: s.term_code.to_string(),
                    lecturer: s.lecturer.clone(),
                    meetings: s.meetings.iter().map(ToString::to_string).collect(),
                    capacity: s.capacity,
                    enrolled: seats.map_or(0, |st| st.enrolled),
                    state: seats.map_or(s.state, |st| st.state),
                }
            })
            .collect(),
    ))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineView {
    pub section_id: String,
    pub course_code: String,
    pub title: String,
    pub class_label: String,
    pub credits: u32,
    pub status: LineStatus,
    pub committed_at: Timestamp,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanView {
    pub nim: String,
    pub term_code: String,
    pub lines: Vec<LineView>,
    pub active_credits: u32,
    pub credit_cap: u32,
    pub over_credit_permit: bool,
    pub print_count: u32,
    pub notifications: Vec<Notification>,
}

fn plan_view(engine: &Engine, nim: &str, term: &TermCode) -> Result<PlanView, ApiError> {
    let plan = engine.plan(nim, term.as_str())?;
    let profile = engine
        .profile(nim)
        .ok_or_else(|| ApiError::NotFound(format!("UNKNOWN_STUDENT: {nim}")))?;
    let catalog = engine.catalog();
    let lines = plan
        .lines
        .iter()
        .map(|l| {
            let section = catalog.section(l.section_id.as_str());
            let course = catalog.course_of_section(&l.section_id);
            LineView {
                section_id: l.section_id.to_string(),
                course_code: course.map_or_else(String::new, |c| c.code.to_string()),
                title: course.map_or_else(String::new, |c| c.title.clone()),
                class_label: section.map_or_else(String::new, |s| s.class_label.clone()),
                credits: course.map_or(0, |c| c.credits),
                status: l.status,
                committed_at: l.committed_at,
            }
        })
        .collect();
    Ok(PlanView {
        nim: plan.nim.to_string(),
        term_code: plan.term_code.to_string(),
        lines,
        active_credits: engine.active_credits(&plan)?,
        credit_cap: profile.credit_cap,
        over_credit_permit: profile.over_credit_permit,
        print_count: plan.print_count,
        notifications: engine
            .notifications_for(nim)
            .into_iter()
            .filter(|n| &n.term_code == term)
            .collect(),
    })
}

fn require_student(engine: &Engine, nim: &str) -> Result<(), ApiError> {
    engine
        .profile(nim)
        .map(|_| ())
        .ok_or_else(|| ApiError::NotFound(format!("UNKNOWN_STUDENT: {nim}")))
}

async fn get_plan(
    State(state): State<AppState>,
    headers: HeaderMap,
    Path(nim): Path<String>,
    q: Result<Query<TermQuery>, QueryRejection>,
) -> Result<Json<PlanView>, ApiError> {
    state.authorize(&headers, Access::PlanOf(&nim))?;
    let term = state.resolve_term(query(q)?.term.as_deref())?;
    require_student(&state.engine, &nim)?;
    Ok(Json(plan_view(&state.engine, &nim, &term.term_code)?))
}

#[derive(Debug, Deserialize)]
struct AddBody {
    section_id: String,
    term: Option<String>,
}

/// Explicit term, else the section's own term, else the current term.
fn term_for_section(state: &AppState, explicit: Option<&str>, section_id: &str) -> Result<TermCode, ApiError> {
    if let Some(t) = explicit {
        return TermCode::parse(t).map_err(|e| ApiError::Unprocessable(e.to_string()));
    }
    match state.engine.catalog().section(section_id) {
        Some(s) => Ok(s.term_code.clone()),
        None => Ok(state.current_term()?.term_code),
    }
}

async fn add_line(
    State(state): State<AppState>,
    headers: HeaderMap,
    Path(nim): Path<String>,
    payload: Result<Json<AddBody>, JsonRejection>,
) -> Result<(StatusCode, Json<PlanLine>), ApiError> {
    let session = state.authorize(&headers, Access::PlanOf(&nim))?;
    let AddBody { section_id, term } = body(payload)?;
    require_student(&state.engine, &nim)?;
    let req = AddRequest {
        nim: Nim::from(nim),
        term_code: term_for_section(&state, term.as_deref(), &section_id)?,
        section_id: SectionId::from(section_id),
        requested_at: state.now(),
    };
    let engine = state.engine.clone();
    let verdict = blocking(move || Ok(engine.commit_add_by(&req, &session.principal)?)).await?;
    match verdict.committed_line {
        Some(line) if verdict.accepted => Ok((StatusCode::CREATED, Json(line))),
        _ => Err(ApiError::violations(verdict.violations)),
    }
}

async fn withdraw_line(
    State(state): State<AppState>,
    headers: HeaderMap,
    Path((nim, section_id)): Path<(String, String)>,
    q: Result<Query<TermQuery>, QueryRejection>,
) -> Result<Json<PlanLine>, ApiError> {
    let session = state.authorize(&headers, Access::PlanOf(&nim))?;
    let q = query(q)?;
    require_student(&state.engine, &nim)?;
    let term = term_for_section(&state, q.term.as_deref(), &section_id)?;
    let now = state.now();
    let engine = state.engine.clone();
    let verdict = blocking(move || {
        Ok(engine.commit_withdraw_by(&Nim::from(nim), &term, &SectionId::from(section_id), now, &session.principal)?)
    })
    .await?;
    match verdict.committed_line {
        Some(line) if verdict.accepted => Ok(Json(line)),
        _ if verdict.codes() == [ViolationCode::UnknownSection] => Err(ApiError::NotFound(
            verdict.violations.into_iter().next().map(|v| v.detail).unwrap_or_default(),
        )),
        _ => Err(ApiError::violations(verdict.violations)),
    }
}

async fn render_document(
    State(state): State<AppState>,
    headers: HeaderMap,
    Path(nim): Path<String>,
    q: Result<Query<TermQuery>, QueryRejection>,
) -> Result<Response, ApiError> {
    state.authorize(&headers, Access::PlanOf(&nim))?;
    let term = state.resolve_term(query(q)?.term.as_deref())?;
    let now = state.now();
    let engine = state.engine.clone();
    let doc = blocking(move || Ok(engine.render_krs(&nim, term.term_code.as_str(), now)?)).await?;
    let count = HeaderValue::from(doc.print_count);
    Ok((
        [
            (header::CONTENT_TYPE, HeaderValue::from_static("text/plain; charset=utf-8")),
            (header::HeaderName::from_static("x-print-count"), count),
        ],
        doc.text,
    )
        .into_response())
}

#[derive(Debug, Deserialize)]
struct DemandQuery {
    term: Option<String>,
    #[serde(default)]
    below_threshold: bool,
}

async fn demand(
    State(state): State<AppState>,
    headers: HeaderMap,
    q: Result<Query<DemandQuery>, QueryRejection>,
) -> Result<Json<Vec<DemandRow>>, ApiError> {
    state.authorize(&headers, Access::Staff)?;
    let q = query(q)?;
    let term = state.resolve_term(q.term.as_deref())?;
    let rows = state.engine.demand_report(term.term_code.as_str())?;
    Ok(Json(rows.into_iter().filter(|r| !q.below_threshold || r.below_threshold).collect()))
}

#[derive(Debug, Deserialize)]
struct DecisionBody {
    decision: Decision,
}

async fn decide(
    State(state): State<AppState>,
    headers: HeaderMap,
    Path(id): Path<String>,
    payload: Result<Json<DecisionBody>, JsonRejection>,
) -> Result<Json<DecisionOutcome>, ApiError> {
    let session = state.authorize(&headers, Access::Staff)?;
    let DecisionBody { decision } = body(payload)?;
    let now = state.now();
    let engine = state.engine.clone();
    let outcome = blocking(move || Ok(engine.decide_section(&id, decision, &session.principal, now)?)).await?;
    Ok(Json(outcome))
}

#[derive(Debug, Deserialize)]
struct SinceQuery {
    #[serde(default)]
    since: u64,
}

async fn list_announcements(
    State(state): State<AppState>,
    headers: HeaderMap,
    q: Result<Query<SinceQuery>, QueryRejection>,
) -> Result<Json<Vec<Announcement>>, ApiError> {
    state.authorize(&headers, Access::Public)?;
    Ok(Json(state.engine.announcements_since(query(q)?.since)))
}

#[derive(Debug, Deserialize)]
struct AnnouncementBody {
    title: String,
    body: String,
}

async fn post_announcement(
    State(state): State<AppState>,
    headers: HeaderMap,
    payload: Result<Json<AnnouncementBody>, JsonRejection>,
) -> Result<(StatusCode, Json<Announcement>), ApiError> {
    let session = state.authorize(&headers, Access::Staff)?;
    let AnnouncementBody { title, body: text } = body(payload)?;
    if title.trim().is_empty() {
        return Err(ApiError::Unprocessable("title must not be empty".into()));
    }
    let now = state.now();
    let engine = state.engine.clone();
    let posted = blocking(move || Ok(engine.post_announcement(&session.principal, now, &title, &text)?)).await?;
    Ok((StatusCode::CREATED, Json(posted)))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RosterEntry {
    pub nim: String,
    pub name: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RosterView {
    pub section_id: String,
    pub course_code: String,
    pub class_label: String,
    pub students: Vec<RosterEntry>,
}

async fn roster(
    State(state): State<AppState>,
    headers: HeaderMap,
    Path(id): Path<String>,
) -> Result<Json<RosterView>, ApiError> {
    let section = state
        .engine
        .catalog()
        .section(&id)
        .cloned()
        .ok_or_else(|| ApiError::NotFound(format!("UNKNOWN_SECTION: {id}")))?;
    state.authorize(&headers, Access::RosterOf(&section.lecturer))?;
    let students = state
        .engine
        .roster(&id)?
        .into_iter()
        .map(|nim| RosterEntry {
            name: state.engine.profile(nim.as_str()).map(|p| p.name).unwrap_or_default(),
            nim: nim.to_string(),
        })
        .collect();
    Ok(Json(RosterView {
        section_id: section.section_id.to_string(),
        course_code: section.course_code.to_string(),
        class_label: section.class_label,
        students,
    }))
}
