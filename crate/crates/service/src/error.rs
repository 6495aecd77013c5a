use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use odflow::flow3d::Flow3dError;
use odflow::layouts::{LayoutError, SCHEMA_VERSION};
use odflow::oddata::DataError;
use serde_json::{json, Map, Value};

use crate::json_response;

/// Error body: `{"schemaVersion": 1, "error": {"kind", "message", ...}}`.
#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub kind: String,
    pub message: String,
    /// Extra fields merged into the error object.
    pub detail: Map<String, Value>,
}

impl ApiError {
    pub fn new(status: StatusCode, kind: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            status,
            kind: kind.into(),
            message: message.into(),
            detail: Map::new(),
        }
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "BadRequest", message)
    }

    pub fn not_found(id: &str) -> Self {
        Self::new(
            StatusCode::NOT_FOUND,
            "NotFound",
            format!("no dataset {id:?}"),
        )
    }

    fn with(mut self, key: &str, value: Value) -> Self {
        self.detail.insert(key.into(), value);
        self
    }

    /// Rejected upload payload.
    pub fn upload(e: DataError) -> Self {
        let err = Self::new(StatusCode::BAD_REQUEST, e.kind(), e.to_string());
        match e {
            DataError::Parse {
                source_name,
                location,
                ..
            } => err
                .with("source", json!(source_name))
                .with("location", json!(location)),
            _ => err,
        }
    }

    /// Valid request the engine cannot satisfy.
    pub fn layout(e: LayoutError) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, e.kind(), e.to_string())
    }

    pub fn flow3d(e: Flow3dError) -> Self {
        let err = Self::new(StatusCode::UNPROCESSABLE_ENTITY, e.kind(), e.to_string());
        match e {
            Flow3dError::AntipodalAmbiguity(ids) => err.with("flows", json!(ids)),
            _ => err,
        }
    }
}

impl From<LayoutError> for ApiError {
    fn from(e: LayoutError) -> Self {
        Self::layout(e)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut error = self.detail;
        error.insert("kind".into(), json!(self.kind));
        error.insert("message".into(), json!(self.message));
        let body = json!({ "schemaVersion": SCHEMA_VERSION, "error": error });
        json_response(self.status, &body, [])
    }
}
