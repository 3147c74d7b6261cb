use axum::http::StatusCode;
use serde::{Deserialize, Serialize};

/// Closed set of machine-readable error codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    BadRequest,
    InvalidConfig,
    ConfigNotFound,
    SessionNotFound,
    TurnInFlight,
    SessionNotInProgress,
    SessionNotCompleted,
    EmptyAnswer,
    InvalidSurvey,
    Unauthorized,
    InsufficientData,
    LlmUnreachable,
    PipelineFailed,
    Internal,
}

impl ErrorCode {
    pub fn status(self) -> StatusCode {
        match self {
            ErrorCode::BadRequest | ErrorCode::InvalidConfig => StatusCode::BAD_REQUEST,
            ErrorCode::Unauthorized => StatusCode::UNAUTHORIZED,
            ErrorCode::ConfigNotFound | ErrorCode::SessionNotFound => StatusCode::NOT_FOUND,
            ErrorCode::TurnInFlight
            | ErrorCode::SessionNotInProgress
            | ErrorCode::SessionNotCompleted
            | ErrorCode::InsufficientData => StatusCode::CONFLICT,
            ErrorCode::EmptyAnswer | ErrorCode::InvalidSurvey => StatusCode::UNPROCESSABLE_ENTITY,
            ErrorCode::LlmUnreachable | ErrorCode::PipelineFailed => StatusCode::BAD_GATEWAY,
            ErrorCode::Internal => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiError {
    pub status: u16,
    pub code: ErrorCode,
    pub message: String,
}

impl ApiError {
    pub fn new(code: ErrorCode, message: impl Into<String>) -> Self {
        Self {
            status: code.status().as_u16(),
            code,
            message: message.into(),
        }
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(ErrorCode::Internal, message)
    }

    pub fn status(&self) -> StatusCode {
        self.code.status()
    }
}
