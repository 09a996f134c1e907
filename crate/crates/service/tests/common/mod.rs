#![allow(dead_code)]

use std::fs::File;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use krs_core::people::import_people;
use krs_core::{
    import_catalog, Account, Engine, EngineConfig, MemoryStore, Role, Snapshot, Term, TermCode, Timestamp, Window,
};
use krs_service::{router, AppState, ManualClock, SessionStore};
use serde_json::Value;
use tower::ServiceExt;

pub fn ts(s: &str) -> Timestamp {
    s.parse().unwrap()
}

pub const DURING: &str = "2008-02-25T10:17:01Z";

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/tests/data/sample_term")
        .join(name)
}

pub fn term_20072() -> Term {
    Term::new(
        TermCode::parse("20072").unwrap(),
        Window::new(ts("2008-02-01T00:00:00Z"), ts("2008-02-29T00:00:00Z")).unwrap(),
        Window::new(ts("2008-02-10T00:00:00Z"), ts("2008-03-15T00:00:00Z")).unwrap(),
        10,
    )
}

/// sample catalog and students, term 20072, a staff account `staff1` and a
/// lecturer account `widodo` (teaches both KU4026 classes).
pub fn sample_snapshot() -> Snapshot {
    let catalog = import_catalog(
        File::open(fixture("courses.csv")).unwrap(),
        File::open(fixture("sections.csv")).unwrap(),
    )
    .unwrap();
    let people = import_people(
        File::open(fixture("students.csv")).unwrap(),
        Some(File::open(fixture("records.csv")).unwrap()),
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
    for a in people
        .accounts
        .into_iter()
        .chain([Account::new("staff1", Role::Staff, "staffpw"), Account::new("widodo", Role::Lecturer, "lectpw")])
    {
        snap.state.accounts.insert(a.principal.clone(), a);
    }
    snap
}

pub struct Harness {
    pub engine: Arc<Engine>,
    pub store: MemoryStore,
    pub clock: Arc<ManualClock>,
    pub app: Router,
}

impl Harness {
    pub fn new(snapshot: Snapshot) -> Self {
        let (engine, store) = Engine::in_memory(snapshot, EngineConfig::default());
        let engine = Arc::new(engine);
        let clock = Arc::new(ManualClock::new(ts(DURING)));
        let state = AppState::new(engine.clone(), SessionStore::new(Duration::from_secs(30 * 60)), clock.clone());
        Self {
            engine,
            store,
            clock,
            app: router(state),
        }
    }

    pub fn sample() -> Self {
        Self::new(sample_snapshot())
    }

    pub async fn request(&self, method: Method, uri: &str, token: Option<&str>, body: Option<Body>) -> Response {
        let mut req = Request::builder().method(method).uri(uri);
        if let Some(t) = token {
            req = req.header("authorization", format!("Bearer {t}"));
        }
        let req = match body {
            Some(b) => req.header("content-type", "application/json").body(b),
            None => req.body(Body::empty()),
        }
        .unwrap();
        let resp = self.app.clone().oneshot(req).await.unwrap();
        let status = resp.status();
        let headers = resp.headers().clone();
        let bytes = resp.into_body().collect().await.unwrap().to_bytes();
        Response {
            status,
            headers,
            text: String::from_utf8(bytes.to_vec()).unwrap(),
        }
    }

    pub async fn get(&self, uri: &str, token: &str) -> Response {
        self.request(Method::GET, uri, Some(token), None).await
    }

    pub async fn post(&self, uri: &str, token: &str, body: Value) -> Response {
        self.request(Method::POST, uri, Some(token), Some(Body::from(body.to_string()))).await
    }

    pub async fn delete(&self, uri: &str, token: &str) -> Response {
        self.request(Method::DELETE, uri, Some(token), None).await
    }

    pub async fn login(&self, principal: &str, password: &str) -> String {
        let resp = self
            .request(
                Method::POST,
                "/api/v1/sessions",
                None,
                Some(Body::from(serde_json::json!({"principal": principal, "password": password}).to_string())),
            )
            .await;
        assert_eq!(resp.status, StatusCode::CREATED, "{}", resp.text);
        resp.json()["token"].as_str().unwrap().to_owned()
    }
}

#[derive(Debug)]
pub struct Response {
    pub status: StatusCode,
    pub headers: axum::http::HeaderMap,
    pub text: String,
}

impl Response {
    pub fn json(&self) -> Value {
        serde_json::from_str(&self.text).unwrap_or_else(|e| panic!("{e}: {}", self.text))
    }

    pub fn codes(&self) -> Vec<String> {
        self.json()["violations"]
            .as_array()
            .map(|a| a.iter().map(|v| v["code"].as_str().unwrap().to_owned()).collect())
            .unwrap_or_default()
    }
}
