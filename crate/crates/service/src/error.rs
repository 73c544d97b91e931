use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::Serialize;
use serde_json::{json, Value};

use pattern_atlas::{EntryError, NavError, SolutionError, StoreError, ViewError};

/// Error body returned by every endpoint: `{code, message, detail}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ApiError {
    #[serde(skip)]
    pub status: StatusCode,
    pub code: String,
    pub message: String,
    pub detail: Value,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            code: code.to_string(),
            message: message.into(),
            detail: Value::Null,
        }
    }

    pub fn with_detail(mut self, detail: Value) -> Self {
        self.detail = detail;
        self
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, "BAD_REQUEST", message)
    }

    pub fn not_found(code: &str, message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::NOT_FOUND, code, message)
    }

    pub fn internal(message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "INTERNAL", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(&self)).into_response()
    }
}

impl From<NavError> for ApiError {
    fn from(e: NavError) -> Self {
        let status = match &e {
            NavError::UnknownScope(_) | NavError::UnknownPattern(_) | NavError::UnknownLink(_) => {
                StatusCode::NOT_FOUND
            }
            NavError::InvalidMaxLen => StatusCode::BAD_REQUEST,
            NavError::StaleScope { .. }
            | NavError::NotAdjacent(_)
            | NavError::NotTraversable(_)
            | NavError::RepeatedPattern(_)
            | NavError::ExcludesConflict(_, _)
            | NavError::InvalidPath(_) => StatusCode::CONFLICT,
        };
        let detail = match &e {
            NavError::InvalidPath(v) => json!({ "violations": v }),
            _ => Value::Null,
        };
        ApiError::new(status, e.code(), e.to_string()).with_detail(detail)
    }
}

impl From<EntryError> for ApiError {
    fn from(e: EntryError) -> Self {
        match e {
            EntryError::Navigation(nav) => nav.into(),
            other => ApiError::new(StatusCode::BAD_REQUEST, other.code(), other.to_string()),
        }
    }
}

impl From<ViewError> for ApiError {
    fn from(e: ViewError) -> Self {
        let (status, detail) = match &e {
            ViewError::ClosureViolation(link) | ViewError::UnknownLink(link) => {
                (StatusCode::UNPROCESSABLE_ENTITY, json!({ "link_id": link }))
            }
            ViewError::UnknownPattern(at) => (
                StatusCode::UNPROCESSABLE_ENTITY,
                json!({ "pattern_ref": at }),
            ),
            ViewError::StaleView { view, .. } => (StatusCode::CONFLICT, json!({ "view_id": view })),
            ViewError::InvalidId(id) => (StatusCode::BAD_REQUEST, json!({ "id": id })),
            ViewError::DuplicateViewId(id) => (StatusCode::CONFLICT, json!({ "id": id })),
            ViewError::QualifiedIdCollision(a, b) => {
                (StatusCode::CONFLICT, json!({ "pattern_refs": [a, b] }))
            }
        };
        ApiError::new(status, e.code(), e.to_string()).with_detail(detail)
    }
}

impl From<SolutionError> for ApiError {
    fn from(e: SolutionError) -> Self {
        let status = match &e {
            SolutionError::DuplicateSolutionId(_) => StatusCode::CONFLICT,
            SolutionError::UnknownPattern(_) | SolutionError::UnknownSolution(_) => {
                StatusCode::NOT_FOUND
            }
            _ => StatusCode::UNPROCESSABLE_ENTITY,
        };
        ApiError::new(status, e.code(), e.to_string())
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.code(), e.to_string())
    }
}
