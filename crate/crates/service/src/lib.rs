//! JSON-over-HTTP API for running interviews.
//!
//! Participant endpoints never expose justifications, expertise levels or
//! uniqueness rationales. Admin endpoints require the shared secret from
//! `AIVIEW_ADMIN_TOKEN` in the `x-admin-token` header.

mod error;

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::Arc;

use aiview_core::analytics::{analyze_study, StatsError, StudyReport};
use aiview_core::storage::{export_answers_csv, StorageError};
use aiview_core::{
    validate_config, Orchestrator, OrchestratorError, Session, SessionStatus, StudyConfig, SurveyResponse,
    TranscriptDocument, TranscriptStore, TurnResult,
};
use axum::extract::{Path, State};
use axum::http::{HeaderMap, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tokio::sync::Mutex;
use tower_http::cors::{Any, CorsLayer};
use tracing::info;

pub use error::{ApiError, ErrorCode};

pub const ENV_BIND: &str = "AIVIEW_BIND";
pub const ENV_ADMIN_TOKEN: &str = "AIVIEW_ADMIN_TOKEN";
pub const ENV_CORS_ORIGIN: &str = "AIVIEW_CORS_ORIGIN";
pub const ADMIN_HEADER: &str = "x-admin-token";
pub const DEFAULT_BIND: &str = "127.0.0.1:8080";

/// Name under which the bundled case-study configuration is registered.
pub const CASE_STUDY_CONFIG: &str = "llm-workplace";

type SessionSlot = Arc<Mutex<Session>>;

pub struct AppState {
    orchestrator: Orchestrator,
    store: TranscriptStore,
    configs: HashMap<String, StudyConfig>,
    admin_token: Option<String>,
    sessions: std::sync::Mutex<HashMap<String, SessionSlot>>,
}

impl AppState {
    /// `orchestrator` should persist into `store`.
    pub fn new(orchestrator: Orchestrator, store: TranscriptStore) -> Self {
        let mut configs = HashMap::new();
        configs.insert(CASE_STUDY_CONFIG.to_string(), StudyConfig::llm_workplace_case_study());
        Self {
            orchestrator,
            store,
            configs,
            admin_token: None,
            sessions: std::sync::Mutex::new(HashMap::new()),
        }
    }

    pub fn with_admin_token(mut self, token: Option<String>) -> Self {
        self.admin_token = token.filter(|t| !t.is_empty());
        self
    }

    pub fn with_config(mut self, name: impl Into<String>, config: StudyConfig) -> Self {
        self.configs.insert(name.into(), config);
        self
    }

    fn slot(&self, session_id: &str) -> Result<SessionSlot, ApiError> {
        let mut sessions = self.sessions.lock().unwrap_or_else(|p| p.into_inner());
        if let Some(slot) = sessions.get(session_id) {
            return Ok(slot.clone());
        }
        let session = self.store.resume(session_id).map_err(|e| match e {
            StorageError::NotFound(_) => ApiError::new(ErrorCode::SessionNotFound, "unknown session"),
            other => ApiError::internal(other.to_string()),
        })?;
        let slot = Arc::new(Mutex::new(session));
        sessions.insert(session_id.to_string(), slot.clone());
        Ok(slot)
    }

    fn check_admin(&self, headers: &HeaderMap) -> Result<(), ApiError> {
        let presented = headers.get(ADMIN_HEADER).and_then(|v| v.to_str().ok());
        match (&self.admin_token, presented) {
            (Some(expected), Some(given)) if constant_time_eq(expected.as_bytes(), given.as_bytes()) => Ok(()),
            _ => Err(ApiError::new(ErrorCode::Unauthorized, "missing or invalid admin token")),
        }
    }
}

fn constant_time_eq(a: &[u8], b: &[u8]) -> bool {
    a.len() == b.len() && a.iter().zip(b).fold(0u8, |acc, (x, y)| acc | (x ^ y)) == 0
}

#[derive(Debug, Deserialize)]
pub struct StartRequest {
    pub config_name: Option<String>,
    pub config: Option<StudyConfig>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct StartResponse {
    pub session_id: String,
    pub first_question: String,
    pub area: String,
}

#[derive(Debug, Deserialize)]
pub struct AnswerRequest {
    pub answer: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct AnswerResponse {
    pub response_message: String,
    pub transition_message: String,
    pub next_question: Option<String>,
    pub finished: bool,
    pub closing_message: Option<String>,
}

#[derive(Debug, Deserialize)]
pub struct SurveyRequest {
    pub items: Vec<i64>,
}

/// Participant-safe view of a session.
#[derive(Debug, Serialize, Deserialize)]
pub struct SessionView {
    pub session_id: String,
    pub study_title: String,
    pub status: SessionStatus,
    pub questions_asked: usize,
    pub questions_total: u32,
    pub pending_question: Option<String>,
    pub survey_submitted: bool,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SessionSummary {
    pub session_id: String,
    pub status: SessionStatus,
    pub created_at: String,
    pub questions_asked: usize,
    pub has_survey: bool,
}

pub fn router(state: Arc<AppState>) -> Router {
    let cors = match std::env::var(ENV_CORS_ORIGIN).ok().and_then(|o| o.parse::<HeaderValue>().ok()) {
        Some(origin) => CorsLayer::new().allow_origin(origin),
        None => CorsLayer::new().allow_origin(Any),
    }
    .allow_methods(Any)
    .allow_headers(Any);

    Router::new()
        .route("/api/sessions", post(start_session).get(list_sessions))
        .route("/api/sessions/{id}", get(session_view))
        .route("/api/sessions/{id}/answers", post(submit_answer))
        .route("/api/sessions/{id}/survey", post(submit_survey))
        .route("/api/sessions/{id}/transcript", get(transcript))
        .route("/api/analytics/summary", get(analytics_summary))
        .layer(cors)
        .with_state(state)
}

fn stage_error(failure: &aiview_core::orchestrator::StageFailure) -> ApiError {
    if failure.is_unreachable() {
        ApiError::new(ErrorCode::LlmUnreachable, failure.to_string())
    } else {
        ApiError::new(ErrorCode::PipelineFailed, failure.to_string())
    }
}

async fn start_session(
    State(state): State<Arc<AppState>>,
    Json(req): Json<StartRequest>,
) -> Result<(StatusCode, Json<StartResponse>), ApiError> {
    let config = match (req.config, req.config_name) {
        (Some(config), _) => config,
        (None, Some(name)) => state
            .configs
            .get(&name)
            .cloned()
            .ok_or_else(|| ApiError::new(ErrorCode::ConfigNotFound, format!("unknown config {name:?}")))?,
        (None, None) => {
            return Err(ApiError::new(ErrorCode::BadRequest, "config_name or config is required"));
        }
    };
    let report = validate_config(&config);
    if !report.is_ok() {
        return Err(ApiError::new(ErrorCode::InvalidConfig, report.to_string()));
    }

    let worker = state.clone();
    let session = tokio::task::spawn_blocking(move || worker.orchestrator.start_session(config))
        .await
        .map_err(|e| ApiError::internal(e.to_string()))?
        .map_err(|e| match e {
            OrchestratorError::StageFailed { failure, .. } => stage_error(&failure),
            OrchestratorError::InvalidConfig(m) => ApiError::new(ErrorCode::InvalidConfig, m),
            other => ApiError::internal(other.to_string()),
        })?;

    let first = session.exchanges.first().expect("started session has a question");
    let body = StartResponse {
        session_id: session.session_id.clone(),
        first_question: first.question.text.clone(),
        area: first.question.area_name.clone(),
    };
    info!(session_id = %session.session_id, "session started");
    state
        .sessions
        .lock()
        .unwrap_or_else(|p| p.into_inner())
        .insert(session.session_id.clone(), Arc::new(Mutex::new(session)));
    Ok((StatusCode::CREATED, Json(body)))
}

async fn submit_answer(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    Json(req): Json<AnswerRequest>,
) -> Result<Json<AnswerResponse>, ApiError> {
    let slot = state.slot(&id)?;
    let mut guard = slot
        .try_lock_owned()
        .map_err(|_| ApiError::new(ErrorCode::TurnInFlight, "another answer is being processed"))?;
    if guard.status != SessionStatus::InProgress {
        return Err(ApiError::new(
            ErrorCode::SessionNotInProgress,
            format!("session is {:?}", guard.status),
        ));
    }
    if req.answer.trim().is_empty() {
        return Err(ApiError::new(ErrorCode::EmptyAnswer, "answer must not be empty"));
    }

    let worker = state.clone();
    let result = tokio::task::spawn_blocking(move || {
        let result = worker.orchestrator.submit_answer(&mut guard, &req.answer);
        drop(guard);
        result
    })
    .await
    .map_err(|e| ApiError::internal(e.to_string()))?;

    match result {
        Ok(TurnResult::NextTurn { exchange }) => Ok(Json(AnswerResponse {
            response_message: exchange.response_message,
            transition_message: exchange.transition_message,
            next_question: Some(exchange.question.text),
            finished: false,
            closing_message: None,
        })),
        Ok(TurnResult::Finished { closing_message }) => Ok(Json(AnswerResponse {
            response_message: String::new(),
            transition_message: String::new(),
            next_question: None,
            finished: true,
            closing_message: Some(closing_message),
        })),
        Ok(TurnResult::Failed { error, .. }) => Err(ApiError::new(ErrorCode::PipelineFailed, error)),
        Err(OrchestratorError::EmptyAnswer) => Err(ApiError::new(ErrorCode::EmptyAnswer, "answer must not be empty")),
        Err(OrchestratorError::NotInProgress(s)) => Err(ApiError::new(
            ErrorCode::SessionNotInProgress,
            format!("session is {s:?}"),
        )),
        Err(other) => Err(ApiError::internal(other.to_string())),
    }
}

async fn submit_survey(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    Json(req): Json<SurveyRequest>,
) -> Result<StatusCode, ApiError> {
    let slot = state.slot(&id)?;
    let mut session = slot
        .try_lock()
        .map_err(|_| ApiError::new(ErrorCode::TurnInFlight, "session is busy"))?;
    if session.status != SessionStatus::Completed {
        return Err(ApiError::new(
            ErrorCode::SessionNotCompleted,
            "survey is only accepted after the interview is completed",
        ));
    }
    let survey = SurveyResponse::from_items(&req.items)
        .map_err(|e| ApiError::new(ErrorCode::InvalidSurvey, e.to_string()))?;
    let mut updated = session.clone();
    updated.survey = Some(survey);
    state
        .store
        .save_session(&updated)
        .map_err(|e| ApiError::internal(e.to_string()))?;
    *session = updated;
    Ok(StatusCode::NO_CONTENT)
}

/// Served from the persisted transcript so it never waits on a running turn.
async fn session_view(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> Result<Json<SessionView>, ApiError> {
    let doc = load_doc(&state, &id)?;
    let pending = doc.exchanges.last().filter(|e| !e.is_answered());
    Ok(Json(SessionView {
        session_id: doc.session_id.clone(),
        study_title: doc.config.study_title.clone(),
        status: doc.status,
        questions_asked: doc.exchanges.len(),
        questions_total: doc.config.total_quota(),
        pending_question: pending.map(|e| e.question.text.clone()),
        survey_submitted: doc.survey.is_some(),
    }))
}

fn load_doc(state: &AppState, id: &str) -> Result<TranscriptDocument, ApiError> {
    state.store.load(id).map_err(|e| match e {
        StorageError::NotFound(_) => ApiError::new(ErrorCode::SessionNotFound, "unknown session"),
        other => ApiError::internal(other.to_string()),
    })
}

async fn transcript(
    State(state): State<Arc<AppState>>,
    headers: HeaderMap,
    Path(id): Path<String>,
) -> Result<Json<TranscriptDocument>, ApiError> {
    state.check_admin(&headers)?;
    load_doc(&state, &id).map(Json)
}

async fn list_sessions(
    State(state): State<Arc<AppState>>,
    headers: HeaderMap,
) -> Result<Json<Vec<SessionSummary>>, ApiError> {
    state.check_admin(&headers)?;
    let docs = state.store.list().map_err(|e| ApiError::internal(e.to_string()))?;
    Ok(Json(
        docs.into_iter()
            .map(|d| SessionSummary {
                session_id: d.session_id,
                status: d.status,
                created_at: d.created_at.to_rfc3339(),
                questions_asked: d.exchanges.len(),
                has_survey: d.survey.is_some(),
            })
            .collect(),
    ))
}

async fn analytics_summary(
    State(state): State<Arc<AppState>>,
    headers: HeaderMap,
) -> Result<Json<StudyReport>, ApiError> {
    state.check_admin(&headers)?;
    let docs = state.store.list().map_err(|e| ApiError::internal(e.to_string()))?;
    let export = export_answers_csv(&docs);
    analyze_study(&export.csv).map(Json).map_err(|e| match e {
        StatsError::InsufficientData { .. } => ApiError::new(ErrorCode::InsufficientData, "insufficient data"),
        other => ApiError::new(ErrorCode::InsufficientData, format!("insufficient data: {other}")),
    })
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status(), Json(self)).into_response()
    }
}

/// Serves until `shutdown` resolves, then drains in-flight requests.
pub async fn serve(
    bind: SocketAddr,
    state: Arc<AppState>,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(bind).await?;
    info!(addr = %listener.local_addr()?, "listening");
    axum::serve(listener, router(state))
        .with_graceful_shutdown(shutdown)
        .await
}
