use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::Json;
use krs_core::{EngineError, RuleViolation};
use serde::{Deserialize, Serialize};
use serde_json::json;

/// One entry of a 409 body. Rule violations map one to one; the offering
/// conflicts (`ALREADY_DECIDED`, `SECTION_IN_USE`) use the same shape.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WireViolation {
    pub code: String,
    pub detail: String,
    pub subject: String,
}

impl From<RuleViolation> for WireViolation {
    fn from(v: RuleViolation) -> Self {
        Self {
            code: v.code.as_str().to_owned(),
            detail: v.detail,
            subject: v.subject,
        }
    }
}

#[derive(Debug)]
pub enum ApiError {
    Unauthorized(String),
    Forbidden(String),
    NotFound(String),
    Conflict(Vec<WireViolation>),
    Unprocessable(String),
    Internal(String),
}

impl ApiError {
    pub fn status(&self) -> StatusCode {
        match self {
            ApiError::Unauthorized(_) => StatusCode::UNAUTHORIZED,
            ApiError::Forbidden(_) => StatusCode::FORBIDDEN,
            ApiError::NotFound(_) => StatusCode::NOT_FOUND,
            ApiError::Conflict(_) => StatusCode::CONFLICT,
            ApiError::Unprocessable(_) => StatusCode::UNPROCESSABLE_ENTITY,
            ApiError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }

    pub fn violations(violations: Vec<RuleViolation>) -> Self {
        ApiError::Conflict(violations.into_iter().map(Into::into).collect())
    }
}

impl From<EngineError> for ApiError {
    fn from(e: EngineError) -> Self {
        let msg = e.to_string();
        match e {
            EngineError::UnknownTerm(_)
            | EngineError::UnknownStudent(_)
            | EngineError::UnknownSection(_)
            | EngineError::UnknownPlan { .. } => ApiError::NotFound(msg),
            EngineError::AlreadyDecided { ref section_id, .. } | EngineError::SectionInUse(ref section_id) => {
                ApiError::Conflict(vec![WireViolation {
                    code: e.code().to_owned(),
                    subject: section_id.to_string(),
                    detail: msg,
                }])
            }
            EngineError::Domain(_) | EngineError::Catalog(_) => ApiError::Unprocessable(msg),
            EngineError::Store(_) => ApiError::Internal(msg),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = self.status();
        match self {
            ApiError::Conflict(violations) => (status, Json(json!({ "violations": violations }))).into_response(),
            ApiError::Unauthorized(msg) => (
                status,
                [(header::WWW_AUTHENTICATE, "Bearer")],
                Json(json!({ "error": msg })),
            )
                .into_response(),
            ApiError::Internal(msg) => {
                eprintln!("krs: internal error: {msg}");
                (status, Json(json!({ "error": msg }))).into_response()
            }
            ApiError::Forbidden(msg) | ApiError::NotFound(msg) | ApiError::Unprocessable(msg) => {
                (status, Json(json!({ "error": msg }))).into_response()
            }
        }
    }
}
