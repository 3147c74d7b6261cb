//! The interview state machine.
//!
//! `start_session` runs system-prompt generation (M1) and the opening
//! question (M2). Each `submit_answer` then runs expertise profiling (M3),
//! the iterative turn (M4) and the uniqueness check (M5), regenerating M4
//! while the judge reports a duplicate and the retry budget lasts.
//!
//! A turn is applied to a working copy of the session and committed only once
//! every stage succeeded and the transcript was persisted, so a failed turn
//! leaves the session exactly as it was.

use std::fmt;
use std::sync::Arc;

use chrono::Utc;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use tracing::{info, warn};

use crate::domain::{validate_config, Exchange, FailureRecord, Question, Session, SessionStatus, StudyConfig};
use crate::llm::{ChatBackend, ChatMessage, CompletionParams, LlmError, Stage};
use crate::prompts::{
    parse_expertise, parse_initial_question, parse_iterative_turn, parse_system_prompt, parse_uniqueness,
    with_repair_note, ParseError, PromptBuilder, PromptError, Verdict,
};
use crate::storage::{StorageError, TranscriptStore};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrchestratorPolicy {
    pub max_uniqueness_retries: u32,
    pub max_parse_repairs: u32,
    /// Run M3 after every answer. When off, the level carries over unchanged.
    pub profile_every_answer: bool,
}

impl Default for OrchestratorPolicy {
    fn default() -> Self {
        Self {
            max_uniqueness_retries: 3,
            max_parse_repairs: 1,
            profile_every_answer: true,
        }
    }
}

/// Why a pipeline stage gave up.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StageFailure {
    pub stage: Stage,
    /// One entry per failed attempt, oldest first.
    pub errors: Vec<String>,
    /// The backend itself failed (as opposed to its reply being unusable).
    pub backend_error: Option<LlmError>,
}

impl StageFailure {
    pub fn is_unreachable(&self) -> bool {
        self.backend_error.as_ref().is_some_and(LlmError::is_unreachable)
    }
}

impl fmt::Display for StageFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "stage {} failed: {}", self.stage, self.errors.join("; then "))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TurnResult {
    NextTurn { exchange: Exchange },
    Finished { closing_message: String },
    Failed { stage: Stage, error: String },
}

#[derive(Debug, Error)]
pub enum OrchestratorError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("session {session_id} aborted: {failure}")]
    StageFailed { session_id: String, failure: StageFailure },
    #[error("session is {0:?}, not in progress")]
    NotInProgress(SessionStatus),
    #[error("no question is waiting for an answer")]
    NoPendingQuestion,
    #[error("answer must not be empty")]
    EmptyAnswer,
    #[error("no transcript store configured")]
    NoStore,
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Storage(#[from] StorageError),
}

/// Fixed closing text shown after the last answer.
pub fn closing_message(config: &StudyConfig) -> String {
    format!(
        "Thank you for taking part in the interview on \"{}\". The interview is now complete.",
        config.study_title
    )
}

pub struct Orchestrator {
    backend: Arc<dyn ChatBackend>,
    model: String,
    prompts: PromptBuilder,
    policy: OrchestratorPolicy,
    store: Option<TranscriptStore>,
}

impl fmt::Debug for Orchestrator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Orchestrator")
            .field("model", &self.model)
            .field("policy", &self.policy)
            .field("store", &self.store)
            .finish_non_exhaustive()
    }
}

enum Attempt<T> {
    Parsed(T),
    Rejected(String, ParseError),
}

impl Orchestrator {
    pub fn new(backend: Arc<dyn ChatBackend>, model: impl Into<String>) -> Self {
        Self {
            backend,
            model: model.into(),
            prompts: PromptBuilder::default(),
            policy: OrchestratorPolicy::default(),
            store: None,
        }
    }

    pub fn with_policy(mut self, policy: OrchestratorPolicy) -> Self {
        self.policy = policy;
        self
    }

    pub fn with_prompts(mut self, prompts: PromptBuilder) -> Self {
        self.prompts = prompts;
        self
    }

    /// Persist the transcript after every state change.
    pub fn with_store(mut self, store: TranscriptStore) -> Self {
        self.store = Some(store);
        self
    }

    pub fn policy(&self) -> &OrchestratorPolicy {
        &self.policy
    }

    pub fn store(&self) -> Option<&TranscriptStore> {
        self.store.as_ref()
    }

    fn persist(&self, session: &Session) -> Result<(), StorageError> {
        if let Some(store) = &self.store {
            store.save_session(session)?;
        }
        Ok(())
    }

    fn attempt<T>(
        &self,
        stage: Stage,
        messages: &[ChatMessage],
        parse: &dyn Fn(&str) -> Result<T, ParseError>,
        errors: &mut Vec<String>,
    ) -> Result<Attempt<T>, StageFailure> {
        let params = CompletionParams::for_stage(&self.model, stage);
        let raw = self.backend.complete(messages, &params, stage).map_err(|e| {
            errors.push(e.to_string());
            StageFailure {
                stage,
                errors: std::mem::take(errors),
                backend_error: Some(e),
            }
        })?;
        Ok(match parse(&raw) {
            Ok(v) => Attempt::Parsed(v),
            Err(e) => Attempt::Rejected(raw, e),
        })
    }

    /// Re-asks `stage` with the parse error appended to the user prompt, up
    /// to `max_parse_repairs` times. Returns the first reply that parses.
    pub fn repair_and_retry<T>(
        &self,
        stage: Stage,
        messages: &[ChatMessage],
        failed_raw: &str,
        error: &ParseError,
        parse: &dyn Fn(&str) -> Result<T, ParseError>,
    ) -> Result<T, StageFailure> {
        let mut errors = vec![error.to_string()];
        let mut last_raw = failed_raw.to_string();
        let mut last_err = error.to_string();
        for _ in 0..self.policy.max_parse_repairs {
            let repaired = with_repair_note(messages, &last_raw, &last_err);
            match self.attempt(stage, &repaired, parse, &mut errors)? {
                Attempt::Parsed(v) => return Ok(v),
                Attempt::Rejected(raw, e) => {
                    warn!(%stage, error = %e, "repair reply rejected");
                    errors.push(e.to_string());
                    last_raw = raw;
                    last_err = e.to_string();
                }
            }
        }
        Err(StageFailure {
            stage,
            errors,
            backend_error: None,
        })
    }

    fn run_stage<T>(
        &self,
        stage: Stage,
        messages: &[ChatMessage],
        parse: &dyn Fn(&str) -> Result<T, ParseError>,
    ) -> Result<T, StageFailure> {
        let mut errors = Vec::new();
        match self.attempt(stage, messages, parse, &mut errors)? {
            Attempt::Parsed(v) => Ok(v),
            Attempt::Rejected(raw, e) => {
                warn!(%stage, error = %e, "stage reply rejected");
                self.repair_and_retry(stage, messages, &raw, &e, parse)
            }
        }
    }

    /// Runs M1 and M2 and returns a session waiting for its first answer.
    pub fn start_session(&self, config: StudyConfig) -> Result<Session, OrchestratorError> {
        let report = validate_config(&config);
        if !report.is_ok() {
            return Err(OrchestratorError::InvalidConfig(report.to_string()));
        }
        let mut session = Session::new(config);
        session
            .transition(SessionStatus::InProgress)
            .expect("fresh session starts as Created");
        info!(session_id = %session.session_id, "starting session");

        match self.open(&mut session) {
            Ok(()) => {
                self.persist(&session)?;
                Ok(session)
            }
            Err(failure) => {
                session.failure = Some(FailureRecord {
                    stage: failure.stage,
                    error: failure.to_string(),
                });
                session
                    .transition(SessionStatus::Aborted)
                    .expect("in-progress session can abort");
                if let Err(e) = self.persist(&session) {
                    warn!(error = %e, "could not persist aborted session");
                }
                Err(OrchestratorError::StageFailed {
                    session_id: session.session_id,
                    failure,
                })
            }
        }
    }

    fn open(&self, session: &mut Session) -> Result<(), StageFailure> {
        let prompt_failure = |stage, e: PromptError| StageFailure {
            stage,
            errors: vec![e.to_string()],
            backend_error: None,
        };

        let messages = self
            .prompts
            .system_prompt(&session.config)
            .map_err(|e| prompt_failure(Stage::M1, e))?;
        session.system_prompt = self.run_stage(Stage::M1, &messages, &parse_system_prompt)?;

        let area = session
            .next_area()
            .cloned()
            .expect("valid config has quota at start");
        let messages = self
            .prompts
            .initial_question(session)
            .map_err(|e| prompt_failure(Stage::M2, e))?;
        let question = self.run_stage(Stage::M2, &messages, &|raw| parse_initial_question(raw, &area.name))?;

        session
            .decrement_quota(&area.name)
            .expect("area chosen by next_area has quota");
        session.exchanges.push(Exchange {
            index: 0,
            question,
            answer: String::new(),
            response_message: String::new(),
            transition_message: String::new(),
            expertise_before: session.current_expertise,
            expertise_after: None,
            expertise_rationale: String::new(),
            uniqueness_retries: 0,
            uniqueness_unresolved: false,
            asked_at: Utc::now(),
            answered_at: None,
        });
        Ok(())
    }

    /// Records `answer` and produces the next question, or finishes the
    /// interview once every quota is spent.
    pub fn submit_answer(&self, session: &mut Session, answer: &str) -> Result<TurnResult, OrchestratorError> {
        if session.status != SessionStatus::InProgress {
            return Err(OrchestratorError::NotInProgress(session.status));
        }
        let answer = answer.trim();
        if answer.is_empty() {
            return Err(OrchestratorError::EmptyAnswer);
        }
        if session.pending_exchange().is_none() {
            return Err(OrchestratorError::NoPendingQuestion);
        }

        let mut work = session.clone();
        let result = match self.advance(&mut work, answer) {
            Ok(result) => result,
            Err(failure) => {
                warn!(session_id = %session.session_id, %failure, "turn failed");
                return Ok(TurnResult::Failed {
                    stage: failure.stage,
                    error: failure.to_string(),
                });
            }
        };
        self.persist(&work)?;
        *session = work;
        Ok(result)
    }

    fn advance(&self, session: &mut Session, answer: &str) -> Result<TurnResult, StageFailure> {
        let prompt_failure = |stage, e: PromptError| StageFailure {
            stage,
            errors: vec![e.to_string()],
            backend_error: None,
        };

        {
            let pending = session.exchanges.last_mut().expect("pending exchange checked");
            pending.answer = answer.to_string();
            pending.answered_at = Some(Utc::now());
        }

        let (level, rationale) = if self.policy.profile_every_answer {
            let messages = self
                .prompts
                .expertise(&session.exchanges)
                .map_err(|e| prompt_failure(Stage::M3, e))?;
            let assessment = self.run_stage(Stage::M3, &messages, &parse_expertise)?;
            (assessment.level, assessment.rationale)
        } else {
            (session.current_expertise, String::new())
        };
        {
            let answered = session.exchanges.last_mut().expect("pending exchange checked");
            answered.expertise_after = Some(level);
            answered.expertise_rationale = rationale;
        }
        session.current_expertise = level;

        if session.total_remaining() == 0 {
            session
                .transition(SessionStatus::Completed)
                .expect("in-progress session can complete");
            return Ok(TurnResult::Finished {
                closing_message: closing_message(&session.config),
            });
        }

        let area = session
            .next_area()
            .cloned()
            .expect("remaining quota implies an area");
        let priors: Vec<Question> = session.exchanges.iter().map(|e| e.question.clone()).collect();
        let mut rejected: Vec<String> = Vec::new();
        let mut retries = 0;
        let mut unresolved = false;

        let turn = loop {
            let messages = self
                .prompts
                .iterative(session, &area, &rejected)
                .map_err(|e| prompt_failure(Stage::M4, e))?;
            let turn = self.run_stage(Stage::M4, &messages, &|raw| parse_iterative_turn(raw, &area, level))?;

            let messages = self
                .prompts
                .uniqueness(&turn.question, &priors)
                .map_err(|e| prompt_failure(Stage::M5, e))?;
            let verdict = self.run_stage(Stage::M5, &messages, &|raw| parse_uniqueness(raw, priors.len()))?;

            if verdict.verdict == Verdict::Unique {
                break turn;
            }
            if retries >= self.policy.max_uniqueness_retries {
                warn!(session_id = %session.session_id, "uniqueness retries exhausted; keeping last candidate");
                unresolved = true;
                break turn;
            }
            retries += 1;
            rejected.push(turn.question.text);
        };

        session
            .decrement_quota(&area.name)
            .expect("area chosen by next_area has quota");
        let exchange = Exchange {
            index: session.exchanges.len(),
            question: turn.question,
            answer: String::new(),
            response_message: turn.response_message,
            transition_message: turn.transition_message,
            expertise_before: level,
            expertise_after: None,
            expertise_rationale: String::new(),
            uniqueness_retries: retries,
            uniqueness_unresolved: unresolved,
            asked_at: Utc::now(),
            answered_at: None,
        };
        session.exchanges.push(exchange.clone());
        Ok(TurnResult::NextTurn { exchange })
    }

    /// Reloads a persisted session and re-checks its invariants.
    pub fn resume_session(&self, session_id: &str) -> Result<Session, OrchestratorError> {
        let store = self.store.as_ref().ok_or(OrchestratorError::NoStore)?;
        Ok(store.resume(session_id)?)
    }
}
