use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde_json::json;
use tagpag_core::store::StoreError;

/// JSON error body: `{"error": code, "message": text}`.
#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            code,
            message: message.into(),
        }
    }

    pub fn unknown_task(task_id: &str) -> Self {
        Self::new(
            StatusCode::NOT_FOUND,
            "unknown_task",
            format!("unknown task `{task_id}`"),
        )
    }

    pub fn bad_request(code: &'static str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, code, message)
    }

    pub fn not_found(message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not_found", message)
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        let (status, code) = match &e {
            StoreError::UnknownTask(_) => (StatusCode::NOT_FOUND, "unknown_task"),
            StoreError::InvalidLabels(_) => (StatusCode::UNPROCESSABLE_ENTITY, "invalid_labels"),
            StoreError::InvalidAnnotatorId(_) => (StatusCode::BAD_REQUEST, "invalid_annotator_id"),
            StoreError::StorageFailure(_) => (StatusCode::INTERNAL_SERVER_ERROR, "storage_failure"),
            StoreError::CorruptLog { .. } | StoreError::Io { .. } => {
                (StatusCode::INTERNAL_SERVER_ERROR, "internal")
            }
        };
        if status.is_server_error() {
            tracing::error!(error = %e, "annotation write failed");
        }
        Self::new(status, code, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (
            self.status,
            Json(json!({ "error": self.code, "message": self.message })),
        )
            .into_response()
    }
}
