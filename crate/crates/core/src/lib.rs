//! Adaptive interview engine.
//!
//! A study configuration lists research areas with priorities and question
//! quotas. The [`orchestrator`] drives a local language model through five
//! stages: system prompt, opening question, expertise profiling, iterative
//! follow-up and uniqueness validation. Transcripts are persisted by
//! [`storage`]; [`analytics`] summarizes post-interview survey responses.

pub mod analytics;
pub mod domain;
pub mod fixture;
pub mod llm;
pub mod orchestrator;
pub mod prompts;
pub mod storage;

pub use domain::{
    validate_config, Exchange, ExpertiseLevel, Priority, Question, ResearchArea, Session, SessionStatus, StudyConfig,
};
pub use llm::{ChatBackend, HttpBackend, ScriptedBackend, Stage};
pub use orchestrator::{Orchestrator, OrchestratorError, OrchestratorPolicy, TurnResult};
pub use storage::{SurveyResponse, TranscriptDocument, TranscriptStore};
