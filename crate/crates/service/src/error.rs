use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ServiceError {
    #[error("unknown session `{0}`")]
    SessionNotFound(String),
    #[error("unknown hypothesis `{0}`")]
    HypothesisNotFound(String),
    #[error("unknown feature `{0}`")]
    UnknownFeature(String),
    #[error("unknown finding status `{0}`")]
    BadStatus(String),
    #[error("invalid request: {0}")]
    BadRequest(String),
    #[error("upstream extractor failure: {0}")]
    Upstream(String),
    #[error("snapshot error: {0}")]
    Snapshot(String),
}

impl ServiceError {
    pub fn status(&self) -> StatusCode {
        match self {
            ServiceError::SessionNotFound(_) | ServiceError::HypothesisNotFound(_) => StatusCode::NOT_FOUND,
            ServiceError::UnknownFeature(_) | ServiceError::BadStatus(_) | ServiceError::BadRequest(_) => {
                StatusCode::UNPROCESSABLE_ENTITY
            }
            ServiceError::Upstream(_) => StatusCode::BAD_GATEWAY,
            ServiceError::Snapshot(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }

    pub fn code(&self) -> &'static str {
        match self {
            ServiceError::SessionNotFound(_) => "session_not_found",
            ServiceError::HypothesisNotFound(_) => "hypothesis_not_found",
            ServiceError::UnknownFeature(_) => "unknown_feature",
            ServiceError::BadStatus(_) => "bad_status",
            ServiceError::BadRequest(_) => "bad_request",
            ServiceError::Upstream(_) => "extractor_failure",
            ServiceError::Snapshot(_) => "snapshot_failure",
        }
    }
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let body = serde_json::json!({ "error": { "code": self.code(), "message": self.to_string() } });
        (self.status(), Json(body)).into_response()
    }
}
