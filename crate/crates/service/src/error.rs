use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use serde::Serialize;

use topicnav_core::report::{to_json, ErrorResponse};
use topicnav_core::{Error, ErrorClass};

/// Codes the service adds on top of the engine's own.
pub mod codes {
    pub const BUILD_IN_PROGRESS: &str = "BUILD_IN_PROGRESS";
    pub const INDEX_NOT_READY: &str = "INDEX_NOT_READY";
    pub const TOPICS_NOT_READY: &str = "TOPICS_NOT_READY";
    pub const EXPERIMENT_NOT_FOUND: &str = "EXPERIMENT_NOT_FOUND";
    pub const DOCUMENT_NOT_FOUND: &str = "DOCUMENT_NOT_FOUND";
    pub const JOB_NOT_FOUND: &str = "JOB_NOT_FOUND";
    pub const INVALID_REQUEST: &str = "INVALID_REQUEST";
    pub const INTERNAL: &str = "INTERNAL";
}

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub body: ErrorResponse,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        Self {
            status,
            body: ErrorResponse::new(code, message),
        }
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, codes::INVALID_REQUEST, message)
    }

    pub fn conflict(code: &str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::CONFLICT, code, message)
    }

    pub fn not_found(code: &str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, code, message)
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, codes::INTERNAL, message)
    }
}

pub fn status_for(e: &Error) -> StatusCode {
    match e {
        Error::UnknownTopic(_) | Error::ManifestMissing(_) => StatusCode::NOT_FOUND,
        Error::MissingArtifact(_) | Error::MissingDependency { .. } | Error::Locked(_) => StatusCode::CONFLICT,
        _ => match e.class() {
            ErrorClass::Validation => StatusCode::BAD_REQUEST,
            ErrorClass::Engine => StatusCode::UNPROCESSABLE_ENTITY,
            ErrorClass::Io => StatusCode::INTERNAL_SERVER_ERROR,
        },
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        Self {
            status: status_for(&e),
            body: ErrorResponse::from(&e),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        json_response(self.status, &self.body)
    }
}

/// Renders through the same serializer as the CLI's `--json` output.
pub fn json_response<T: Serialize>(status: StatusCode, value: &T) -> Response {
    raw_json(status, to_json(value))
}

pub fn raw_json(status: StatusCode, body: String) -> Response {
    (status, [(header::CONTENT_TYPE, "application/json")], body).into_response()
}
