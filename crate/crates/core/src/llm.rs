//! Chat-completion backends.
//!
//! [`HttpBackend`] talks to any local inference server exposing the
//! OpenAI-compatible `/v1/chat/completions` route. [`ScriptedBackend`] replays
//! stage-tagged canned replies for deterministic runs.
//!
//! Backends never retry; the orchestrator owns retry policy. Message content
//! is never logged.

use std::collections::VecDeque;
use std::fmt;
use std::path::Path;
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use tracing::debug;

pub const ENV_LLM_URL: &str = "AIVIEW_LLM_URL";
pub const ENV_LLM_MODEL: &str = "AIVIEW_LLM_MODEL";

pub const DEFAULT_LLM_URL: &str = "http://127.0.0.1:11434";
pub const DEFAULT_MODEL: &str = "llama3.2:3b";

/// Pipeline stage a completion request belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Stage {
    /// System prompt generation.
    M1,
    /// Opening question.
    M2,
    /// Expertise profiling.
    M3,
    /// Iterative turn (response, transition, follow-up question).
    M4,
    /// Question uniqueness judgement.
    M5,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::M1 => "M1",
            Stage::M2 => "M2",
            Stage::M3 => "M3",
            Stage::M4 => "M4",
            Stage::M5 => "M5",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        Self {
            role: Role::System,
            content: content.into(),
        }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Self {
            role: Role::User,
            content: content.into(),
        }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Self {
            role: Role::Assistant,
            content: content.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionParams {
    pub model_name: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub timeout_seconds: f64,
}

impl CompletionParams {
    /// Defaults per stage: generative stages sample at 0.7, judging stages
    /// run greedy at 0.0.
    pub fn for_stage(model_name: &str, stage: Stage) -> Self {
        let temperature = match stage {
            Stage::M2 | Stage::M4 => 0.7,
            Stage::M1 | Stage::M3 | Stage::M5 => 0.0,
        };
        Self {
            model_name: model_name.to_string(),
            temperature,
            max_tokens: 1024,
            timeout_seconds: 120.0,
        }
    }

    fn validate(&self) -> Result<(), LlmError> {
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return Err(LlmError::InvalidRequest("temperature must be >= 0".into()));
        }
        if self.max_tokens == 0 {
            return Err(LlmError::InvalidRequest("max_tokens must be > 0".into()));
        }
        if !(self.timeout_seconds > 0.0 && self.timeout_seconds.is_finite()) {
            return Err(LlmError::InvalidRequest("timeout_seconds must be > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LlmError {
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("backend returned HTTP {status}: {body_excerpt}")]
    Status { status: u16, body_excerpt: String },
    #[error("malformed response body: {0}")]
    MalformedResponse(String),
    #[error("fixture exhausted at stage {stage}")]
    FixtureExhausted { stage: Stage },
    #[error("fixture stage mismatch: expected {expected}, got request for {actual}")]
    FixtureStageMismatch { expected: Stage, actual: Stage },
    #[error("invalid fixture: {0}")]
    InvalidFixture(String),
}

impl LlmError {
    /// True when the backend could not be reached or answered with a
    /// non-success status.
    pub fn is_unreachable(&self) -> bool {
        matches!(self, LlmError::Transport(_) | LlmError::Status { .. })
    }
}

pub trait ChatBackend: Send + Sync {
    /// Returns the assistant text for `messages`, with trailing whitespace
    /// removed and nothing else altered.
    fn complete(
        &self,
        messages: &[ChatMessage],
        params: &CompletionParams,
        stage: Stage,
    ) -> Result<String, LlmError>;
}

fn check_messages(messages: &[ChatMessage]) -> Result<(), LlmError> {
    if messages.is_empty() {
        return Err(LlmError::InvalidRequest("messages must not be empty".into()));
    }
    if messages[1..].iter().any(|m| m.role == Role::System) {
        return Err(LlmError::InvalidRequest(
            "system message is only allowed in first position".into(),
        ));
    }
    if messages
        .iter()
        .any(|m| m.role != Role::Assistant && m.content.trim().is_empty())
    {
        return Err(LlmError::InvalidRequest(
            "system and user messages must have content".into(),
        ));
    }
    Ok(())
}

#[derive(Serialize)]
struct CompletionRequest<'a> {
    model: &'a str,
    messages: &'a [ChatMessage],
    temperature: f64,
    max_tokens: u32,
}

#[derive(Deserialize)]
struct CompletionResponse {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: ReplyMessage,
}

#[derive(Deserialize)]
struct ReplyMessage {
    content: Option<String>,
}

const BODY_EXCERPT_CHARS: usize = 200;

/// Blocking client for an OpenAI-compatible local inference server.
#[derive(Debug, Clone)]
pub struct HttpBackend {
    endpoint: String,
}

impl HttpBackend {
    pub fn new(base_url: &str) -> Self {
        Self {
            endpoint: format!("{}/v1/chat/completions", base_url.trim_end_matches('/')),
        }
    }

    /// Reads the base URL from `AIVIEW_LLM_URL`, falling back to a local
    /// Ollama-style default.
    pub fn from_env() -> Self {
        let url = std::env::var(ENV_LLM_URL).unwrap_or_else(|_| DEFAULT_LLM_URL.to_string());
        Self::new(&url)
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }
}

/// Model name from `AIVIEW_LLM_MODEL` or the default.
pub fn model_from_env() -> String {
    std::env::var(ENV_LLM_MODEL).unwrap_or_else(|_| DEFAULT_MODEL.to_string())
}

impl ChatBackend for HttpBackend {
    fn complete(
        &self,
        messages: &[ChatMessage],
        params: &CompletionParams,
        stage: Stage,
    ) -> Result<String, LlmError> {
        check_messages(messages)?;
        params.validate()?;
        debug!(%stage, messages = messages.len(), "sending completion request");

        let agent = ureq::AgentBuilder::new()
            .timeout(Duration::from_secs_f64(params.timeout_seconds))
            .build();
        let body = CompletionRequest {
            model: &params.model_name,
            messages,
            temperature: params.temperature,
            max_tokens: params.max_tokens,
        };
        let response = match agent.post(&self.endpoint).send_json(&body) {
            Ok(r) => r,
            Err(ureq::Error::Status(status, r)) => {
                let text = r.into_string().unwrap_or_default();
                return Err(LlmError::Status {
                    status,
                    body_excerpt: text.chars().take(BODY_EXCERPT_CHARS).collect(),
                });
            }
            Err(ureq::Error::Transport(t)) => return Err(LlmError::Transport(t.to_string())),
        };
        let text = response
            .into_string()
            .map_err(|e| LlmError::Transport(e.to_string()))?;
        let content = decode_completion(&text)?;
        debug!(%stage, chars = content.len(), "completion received");
        Ok(content)
    }
}

/// Extracts `choices[0].message.content` from a chat-completion body,
/// with trailing whitespace removed.
pub fn decode_completion(body: &str) -> Result<String, LlmError> {
    let parsed: CompletionResponse =
        serde_json::from_str(body).map_err(|e| LlmError::MalformedResponse(e.to_string()))?;
    let content = parsed
        .choices
        .into_iter()
        .next()
        .and_then(|c| c.message.content)
        .ok_or_else(|| LlmError::MalformedResponse("missing choices[0].message.content".into()))?;
    Ok(content.trim_end().to_string())
}

/// One canned reply in a fixture file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixtureRecord {
    pub stage: Stage,
    pub response: String,
}

/// Replays fixture records strictly in order; a request for a different
/// stage than the head record is an error.
#[derive(Debug, Default)]
pub struct ScriptedBackend {
    queue: Mutex<VecDeque<FixtureRecord>>,
}

impl ScriptedBackend {
    pub fn new(records: impl IntoIterator<Item = FixtureRecord>) -> Self {
        Self {
            queue: Mutex::new(records.into_iter().collect()),
        }
    }

    /// Parses a fixture document: a JSON array of `{"stage", "response"}`.
    pub fn from_json(text: &str) -> Result<Self, LlmError> {
        let records: Vec<FixtureRecord> =
            serde_json::from_str(text).map_err(|e| LlmError::InvalidFixture(e.to_string()))?;
        Ok(Self::new(records))
    }

    pub fn from_file(path: &Path) -> Result<Self, LlmError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| LlmError::InvalidFixture(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn remaining(&self) -> usize {
        self.queue.lock().unwrap_or_else(|p| p.into_inner()).len()
    }
}

impl ChatBackend for ScriptedBackend {
    fn complete(
        &self,
        messages: &[ChatMessage],
        _params: &CompletionParams,
        stage: Stage,
    ) -> Result<String, LlmError> {
        check_messages(messages)?;
        let mut queue = self.queue.lock().unwrap_or_else(|p| p.into_inner());
        let head = queue.front().ok_or(LlmError::FixtureExhausted { stage })?;
        if head.stage != stage {
            return Err(LlmError::FixtureStageMismatch {
                expected: head.stage,
                actual: stage,
            });
        }
        let record = queue.pop_front().expect("head checked above");
        Ok(record.response.trim_end().to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::{Read, Write};
    use std::net::TcpListener;

    fn msgs() -> Vec<ChatMessage> {
        vec![ChatMessage::system("be an interviewer"), ChatMessage::user("ask")]
    }

    fn params(stage: Stage) -> CompletionParams {
        CompletionParams::for_stage("test-model", stage)
    }

    #[test]
    fn decode_completion_bodies() {
        let ok = r#"{"choices":[{"message":{"role":"assistant","content":"{\"a\":1}  \n"}}]}"#;
        assert_eq!(decode_completion(ok).unwrap(), "{\"a\":1}");
        for bad in ["", "[]", r#"{"choices":[]}"#, r#"{"choices":[{"message":{}}]}"#] {
            assert!(matches!(decode_completion(bad), Err(LlmError::MalformedResponse(_))), "{bad}");
        }
    }

    fn rec(stage: Stage, response: &str) -> FixtureRecord {
        FixtureRecord {
            stage,
            response: response.into(),
        }
    }

    #[test]
    fn scripted_echoes_head_record() {
        let backend = ScriptedBackend::new([rec(Stage::M3, "Novice")]);
        let out = backend.complete(&msgs(), &params(Stage::M3), Stage::M3).unwrap();
        assert_eq!(out, "Novice");
        assert_eq!(backend.remaining(), 0);
    }

    #[test]
    fn scripted_rejects_stage_mismatch_without_consuming() {
        let backend = ScriptedBackend::new([rec(Stage::M3, "Novice")]);
        let err = backend.complete(&msgs(), &params(Stage::M4), Stage::M4).unwrap_err();
        assert_eq!(
            err,
            LlmError::FixtureStageMismatch {
                expected: Stage::M3,
                actual: Stage::M4
            }
        );
        assert_eq!(backend.remaining(), 1);
    }

    #[test]
    fn scripted_exhaustion_names_stage() {
        let backend = ScriptedBackend::default();
        let err = backend.complete(&msgs(), &params(Stage::M4), Stage::M4).unwrap_err();
        assert_eq!(err.to_string(), "fixture exhausted at stage M4");
    }

    #[test]
    fn scripted_is_deterministic() {
        let records = vec![rec(Stage::M1, "{\"a\":1}  \n"), rec(Stage::M2, "q?")];
        let run = || {
            let b = ScriptedBackend::new(records.clone());
            vec![
                b.complete(&msgs(), &params(Stage::M1), Stage::M1).unwrap(),
                b.complete(&msgs(), &params(Stage::M2), Stage::M2).unwrap(),
            ]
        };
        assert_eq!(run(), run());
        assert_eq!(run()[0], "{\"a\":1}");
    }

    #[test]
    fn fixture_json_format() {
        let b = ScriptedBackend::from_json(r#"[{"stage":"M1","response":"x"},{"stage":"M5","response":"y"}]"#)
            .unwrap();
        assert_eq!(b.remaining(), 2);
        assert!(matches!(
            ScriptedBackend::from_json(r#"[{"stage":"M9","response":"x"}]"#),
            Err(LlmError::InvalidFixture(_))
        ));
    }

    #[test]
    fn rejects_empty_and_misplaced_messages() {
        let b = ScriptedBackend::new([rec(Stage::M1, "x")]);
        assert!(matches!(
            b.complete(&[], &params(Stage::M1), Stage::M1),
            Err(LlmError::InvalidRequest(_))
        ));
        let bad = vec![ChatMessage::user("a"), ChatMessage::system("b")];
        assert!(matches!(
            b.complete(&bad, &params(Stage::M1), Stage::M1),
            Err(LlmError::InvalidRequest(_))
        ));
    }

    #[test]
    fn stage_defaults() {
        assert_eq!(params(Stage::M2).temperature, 0.7);
        assert_eq!(params(Stage::M4).temperature, 0.7);
        assert_eq!(params(Stage::M3).temperature, 0.0);
        assert_eq!(params(Stage::M5).temperature, 0.0);
        assert_eq!(params(Stage::M1).timeout_seconds, 120.0);
    }

    /// Serves a single canned HTTP response and hands back the raw request.
    fn one_shot_server(status_line: &'static str, body: &'static str) -> (String, std::thread::JoinHandle<String>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let handle = std::thread::spawn(move || {
            let (mut stream, _) = listener.accept().unwrap();
            let mut buf = Vec::new();
            let mut chunk = [0u8; 4096];
            loop {
                let n = stream.read(&mut chunk).unwrap();
                buf.extend_from_slice(&chunk[..n]);
                let text = String::from_utf8_lossy(&buf);
                if let Some(end) = text.find("\r\n\r\n") {
                    let len = text[..end]
                        .lines()
                        .find_map(|l| {
                            l.to_ascii_lowercase()
                                .strip_prefix("content-length:")
                                .map(|v| v.trim().parse::<usize>().unwrap())
                        })
                        .unwrap_or(0);
                    if buf.len() >= end + 4 + len {
                        break;
                    }
                }
                if n == 0 {
                    break;
                }
            }
            let reply = format!(
                "{status_line}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                body.len()
            );
            stream.write_all(reply.as_bytes()).unwrap();
            String::from_utf8_lossy(&buf).into_owned()
        });
        (format!("http://{addr}"), handle)
    }

    #[test]
    fn http_backend_speaks_chat_completions() {
        let (url, server) = one_shot_server(
            "HTTP/1.1 200 OK",
            r#"{"choices":[{"message":{"role":"assistant","content":"  {\"level\":\"Expert\"}\n\n"}}]}"#,
        );
        let backend = HttpBackend::new(&format!("{url}/"));
        let out = backend.complete(&msgs(), &params(Stage::M3), Stage::M3).unwrap();
        assert_eq!(out, "  {\"level\":\"Expert\"}");
        let request = server.join().unwrap();
        assert!(request.starts_with("POST /v1/chat/completions "));
        let body: serde_json::Value =
            serde_json::from_str(&request[request.find("\r\n\r\n").unwrap() + 4..]).unwrap();
        assert_eq!(body["model"], "test-model");
        assert_eq!(body["messages"][0]["role"], "system");
        assert_eq!(body["messages"][1]["content"], "ask");
        assert_eq!(body["temperature"], 0.0);
        assert_eq!(body["max_tokens"], 1024);
    }

    #[test]
    fn http_backend_propagates_status() {
        let (url, server) = one_shot_server("HTTP/1.1 500 Internal Server Error", r#"{"error":"model not loaded"}"#);
        let err = HttpBackend::new(&url)
            .complete(&msgs(), &params(Stage::M4), Stage::M4)
            .unwrap_err();
        server.join().unwrap();
        match err {
            LlmError::Status { status, body_excerpt } => {
                assert_eq!(status, 500);
                assert!(body_excerpt.contains("model not loaded"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn http_backend_rejects_malformed_body() {
        let (url, server) = one_shot_server("HTTP/1.1 200 OK", r#"{"choices":[]}"#);
        let err = HttpBackend::new(&url)
            .complete(&msgs(), &params(Stage::M4), Stage::M4)
            .unwrap_err();
        server.join().unwrap();
        assert!(matches!(err, LlmError::MalformedResponse(_)));
    }

    #[test]
    fn http_backend_connection_refused_is_transport() {
        let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
        let err = HttpBackend::new(&format!("http://127.0.0.1:{port}"))
            .complete(&msgs(), &params(Stage::M1), Stage::M1)
            .unwrap_err();
        assert!(matches!(err, LlmError::Transport(_)));
        assert!(err.is_unreachable());
    }
}
