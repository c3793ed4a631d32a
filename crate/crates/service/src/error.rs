use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use minivox_core::engine::EngineError;
use serde_json::json;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LiveError {
    #[error("unknown session {0}")]
    UnknownSession(String),
    #[error("invalid session config: {0}")]
    InvalidConfig(String),
    #[error("malformed audio: {0}")]
    MalformedAudio(String),
    #[error("unsupported content type {0:?} (expected application/octet-stream or audio/wav)")]
    UnsupportedMediaType(String),
    #[error("bad request: {0}")]
    BadRequest(String),
    #[error("frame {frame_index} is outside the feedback window (oldest retained frame is {oldest})")]
    StaleFrame { frame_index: u64, oldest: u64 },
    #[error("frame {0} has not been decided yet")]
    UnknownFrame(u64),
    #[error("frame {0} already received feedback")]
    DuplicateFeedback(u64),
    #[error("protocol error: {0}")]
    Protocol(#[from] EngineError),
}

impl LiveError {
    pub fn status(&self) -> StatusCode {
        match self {
            LiveError::UnknownSession(_) | LiveError::UnknownFrame(_) => StatusCode::NOT_FOUND,
            LiveError::InvalidConfig(_) | LiveError::MalformedAudio(_) | LiveError::BadRequest(_) => {
                StatusCode::BAD_REQUEST
            }
            LiveError::UnsupportedMediaType(_) => StatusCode::UNSUPPORTED_MEDIA_TYPE,
            LiveError::StaleFrame { .. } => StatusCode::GONE,
            LiveError::DuplicateFeedback(_) => StatusCode::CONFLICT,
            LiveError::Protocol(_) => StatusCode::UNPROCESSABLE_ENTITY,
        }
    }

    /// Short machine-readable tag sent alongside the message.
    pub fn code(&self) -> &'static str {
        match self {
            LiveError::UnknownSession(_) => "unknown_session",
            LiveError::InvalidConfig(_) => "invalid_config",
            LiveError::MalformedAudio(_) => "malformed_audio",
            LiveError::UnsupportedMediaType(_) => "unsupported_media_type",
            LiveError::BadRequest(_) => "bad_request",
            LiveError::StaleFrame { .. } => "stale_frame",
            LiveError::UnknownFrame(_) => "unknown_frame",
            LiveError::DuplicateFeedback(_) => "duplicate_feedback",
            LiveError::Protocol(_) => "protocol_error",
        }
    }
}

impl IntoResponse for LiveError {
    fn into_response(self) -> Response {
        let body = json!({ "error": self.code(), "message": self.to_string() });
        (self.status(), Json(body)).into_response()
    }
}
