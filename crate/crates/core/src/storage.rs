//! Transcript files, survey responses and the CSV export consumed by the
//! analytics report.
//!
//! Transcripts live at `{root}/sessions/{session_id}.json`, written
//! atomically (temp file in the same directory, then rename) with a stable
//! key order.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{Exchange, ExpertiseLevel, FailureRecord, Session, SessionStatus, StudyConfig};

pub const SCHEMA_VERSION: u32 = 1;
pub const ENV_DATA_DIR: &str = "AIVIEW_DATA_DIR";
pub const CSV_HEADER: &str = "session_id,question_relevance,engagement,satisfaction";

pub const LIKERT_MIN: u8 = 1;
pub const LIKERT_MAX: u8 = 5;
pub const ITEMS_PER_INDICATOR: usize = 3;
pub const SURVEY_ITEM_COUNT: usize = 3 * ITEMS_PER_INDICATOR;

#[derive(Debug, Error)]
pub enum StorageError {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("transcript not found: {0}")]
    NotFound(String),
    #[error("malformed JSON: {0}")]
    Malformed(String),
    #[error("schema violation: {0}")]
    Schema(String),
    #[error("session invariants violated: {}", .0.join("; "))]
    InvariantMismatch(Vec<String>),
    #[error("invalid survey: {0}")]
    InvalidSurvey(String),
    #[error("CSV error: {0}")]
    Csv(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> StorageError + '_ {
    move |source| StorageError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Post-interview questionnaire: three 1–5 Likert items for each of the
/// three indicators. An indicator score is the mean of its items.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurveyResponse {
    pub question_relevance: [u8; ITEMS_PER_INDICATOR],
    pub engagement: [u8; ITEMS_PER_INDICATOR],
    pub satisfaction: [u8; ITEMS_PER_INDICATOR],
}

impl SurveyResponse {
    /// Items in questionnaire order: relevance, engagement, satisfaction.
    pub fn from_items(items: &[i64]) -> Result<Self, StorageError> {
        if items.len() != SURVEY_ITEM_COUNT {
            return Err(StorageError::InvalidSurvey(format!(
                "expected {SURVEY_ITEM_COUNT} items, got {}",
                items.len()
            )));
        }
        let mut scores = [0u8; SURVEY_ITEM_COUNT];
        for (i, (&v, slot)) in items.iter().zip(scores.iter_mut()).enumerate() {
            if !(i64::from(LIKERT_MIN)..=i64::from(LIKERT_MAX)).contains(&v) {
                return Err(StorageError::InvalidSurvey(format!(
                    "item {i} = {v} is outside {LIKERT_MIN}..={LIKERT_MAX}"
                )));
            }
            *slot = v as u8;
        }
        let take = |k: usize| [scores[3 * k], scores[3 * k + 1], scores[3 * k + 2]];
        Ok(Self {
            question_relevance: take(0),
            engagement: take(1),
            satisfaction: take(2),
        })
    }

    pub fn validate(&self) -> Result<(), StorageError> {
        let all: Vec<i64> = self.items().into_iter().map(i64::from).collect();
        Self::from_items(&all).map(|_| ())
    }

    pub fn items(&self) -> [u8; SURVEY_ITEM_COUNT] {
        let mut out = [0u8; SURVEY_ITEM_COUNT];
        out[..3].copy_from_slice(&self.question_relevance);
        out[3..6].copy_from_slice(&self.engagement);
        out[6..].copy_from_slice(&self.satisfaction);
        out
    }

    fn mean(items: &[u8; ITEMS_PER_INDICATOR]) -> f64 {
        items.iter().map(|&v| f64::from(v)).sum::<f64>() / ITEMS_PER_INDICATOR as f64
    }

    pub fn question_relevance_score(&self) -> f64 {
        Self::mean(&self.question_relevance)
    }

    pub fn engagement_score(&self) -> f64 {
        Self::mean(&self.engagement)
    }

    pub fn satisfaction_score(&self) -> f64 {
        Self::mean(&self.satisfaction)
    }
}

/// On-disk form of a session, schema version 1.
///
/// `remaining_quota` is signed so that corrupted files load and are then
/// reported as invariant violations instead of opaque decode errors.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TranscriptDocument {
    pub schema_version: u32,
    pub session_id: String,
    pub created_at: DateTime<Utc>,
    pub status: SessionStatus,
    pub config: StudyConfig,
    pub system_prompt: String,
    pub current_expertise: ExpertiseLevel,
    pub remaining_quota: BTreeMap<String, i64>,
    pub exchanges: Vec<Exchange>,
    pub failure: Option<FailureRecord>,
    pub survey: Option<SurveyResponse>,
}

impl TranscriptDocument {
    pub fn from_session(session: &Session) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            session_id: session.session_id.clone(),
            created_at: session.created_at,
            status: session.status,
            config: session.config.clone(),
            system_prompt: session.system_prompt.clone(),
            current_expertise: session.current_expertise,
            remaining_quota: session
                .remaining_quota
                .iter()
                .map(|(k, &v)| (k.clone(), i64::from(v)))
                .collect(),
            exchanges: session.exchanges.clone(),
            failure: session.failure.clone(),
            survey: session.survey,
        }
    }

    /// Structural checks that do not need the session invariants.
    pub fn validate(&self) -> Result<(), StorageError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(StorageError::Schema(format!(
                "schema_version must be {SCHEMA_VERSION}, found {}",
                self.schema_version
            )));
        }
        if !is_safe_id(&self.session_id) {
            return Err(StorageError::Schema(format!(
                "session_id {:?} must be 1-128 characters of [A-Za-z0-9_-]",
                self.session_id
            )));
        }
        if let Some(survey) = &self.survey {
            survey.validate()?;
        }
        Ok(())
    }

    /// Rebuilds the session, recomputing quotas from the exchanges and
    /// checking them against the stored values.
    pub fn into_session(self) -> Result<Session, StorageError> {
        self.validate()?;
        let mut problems = Vec::new();
        let mut remaining_quota = BTreeMap::new();
        for (area, &left) in &self.remaining_quota {
            match u32::try_from(left) {
                Ok(v) => {
                    remaining_quota.insert(area.clone(), v);
                }
                Err(_) => problems.push(format!("remaining_quota for {area:?} is {left}")),
            }
        }
        if !problems.is_empty() {
            return Err(StorageError::InvariantMismatch(problems));
        }
        let session = Session {
            session_id: self.session_id,
            config: self.config,
            system_prompt: self.system_prompt,
            exchanges: self.exchanges,
            remaining_quota,
            current_expertise: self.current_expertise,
            status: self.status,
            created_at: self.created_at,
            failure: self.failure,
            survey: self.survey,
        };
        session.check_invariants().map_err(StorageError::InvariantMismatch)?;
        Ok(session)
    }

    /// Canonical serialization: pretty JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("transcript serializes");
        s.push('\n');
        s
    }

    pub fn from_json_slice(bytes: &[u8]) -> Result<Self, StorageError> {
        let doc: Self = serde_json::from_slice(bytes).map_err(|e| match e.classify() {
            serde_json::error::Category::Data => StorageError::Schema(e.to_string()),
            _ => StorageError::Malformed(e.to_string()),
        })?;
        doc.validate()?;
        Ok(doc)
    }
}

fn is_safe_id(id: &str) -> bool {
    !id.is_empty()
        && id.len() <= 128
        && id.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'-' || b == b'_')
}

/// File-backed transcript store rooted at a data directory.
#[derive(Debug, Clone)]
pub struct TranscriptStore {
    root: PathBuf,
}

impl TranscriptStore {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    /// Root from `AIVIEW_DATA_DIR`, defaulting to `./aiview-data`.
    pub fn from_env() -> Self {
        Self::new(std::env::var(ENV_DATA_DIR).unwrap_or_else(|_| "aiview-data".to_string()))
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn sessions_dir(&self) -> PathBuf {
        self.root.join("sessions")
    }

    pub fn path_for(&self, session_id: &str) -> PathBuf {
        self.sessions_dir().join(format!("{session_id}.json"))
    }

    pub fn save(&self, doc: &TranscriptDocument) -> Result<PathBuf, StorageError> {
        save_transcript(doc, &self.root)
    }

    pub fn save_session(&self, session: &Session) -> Result<PathBuf, StorageError> {
        self.save(&TranscriptDocument::from_session(session))
    }

    pub fn load(&self, session_id: &str) -> Result<TranscriptDocument, StorageError> {
        if !is_safe_id(session_id) {
            return Err(StorageError::NotFound(session_id.to_string()));
        }
        load_transcript(&self.path_for(session_id))
    }

    /// Loads and validates a session for continuation.
    pub fn resume(&self, session_id: &str) -> Result<Session, StorageError> {
        self.load(session_id)?.into_session()
    }

    /// All transcripts, ordered by file name.
    pub fn list(&self) -> Result<Vec<TranscriptDocument>, StorageError> {
        let dir = self.sessions_dir();
        let entries = match std::fs::read_dir(&dir) {
            Ok(e) => e,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(io_err(&dir)(e)),
        };
        let mut paths: Vec<PathBuf> = entries
            .filter_map(Result::ok)
            .map(|e| e.path())
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        paths.sort();
        paths.iter().map(|p| load_transcript(p)).collect()
    }
}

/// Writes `doc` to `{root}/sessions/{id}.json` via temp file and rename.
pub fn save_transcript(doc: &TranscriptDocument, root: &Path) -> Result<PathBuf, StorageError> {
    doc.validate()?;
    let dir = root.join("sessions");
    std::fs::create_dir_all(&dir).map_err(io_err(&dir))?;
    let path = dir.join(format!("{}.json", doc.session_id));
    let mut tmp = tempfile::Builder::new()
        .prefix(&format!(".{}.", doc.session_id))
        .suffix(".tmp")
        .tempfile_in(&dir)
        .map_err(io_err(&dir))?;
    tmp.write_all(doc.to_json().as_bytes()).map_err(io_err(&path))?;
    tmp.as_file().sync_all().map_err(io_err(&path))?;
    tmp.persist(&path).map_err(|e| io_err(&path)(e.error))?;
    Ok(path)
}

pub fn load_transcript(path: &Path) -> Result<TranscriptDocument, StorageError> {
    let bytes = match std::fs::read(path) {
        Ok(b) => b,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            return Err(StorageError::NotFound(path.display().to_string()))
        }
        Err(e) => return Err(io_err(path)(e)),
    };
    TranscriptDocument::from_json_slice(&bytes)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsvExport {
    pub csv: String,
    /// Sessions left out because they have no survey.
    pub skipped: usize,
}

/// One row per surveyed session with the three indicator scores.
pub fn export_answers_csv(docs: &[TranscriptDocument]) -> CsvExport {
    let mut csv = String::from(CSV_HEADER);
    csv.push('\n');
    let mut skipped = 0;
    for doc in docs {
        match &doc.survey {
            Some(s) => csv.push_str(&format!(
                "{},{:.4},{:.4},{:.4}\n",
                doc.session_id,
                s.question_relevance_score(),
                s.engagement_score(),
                s.satisfaction_score()
            )),
            None => skipped += 1,
        }
    }
    CsvExport { csv, skipped }
}

/// Indicator scores of one CSV row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndicatorRow {
    pub session_id: String,
    pub question_relevance: f64,
    pub engagement: f64,
    pub satisfaction: f64,
}

/// Parses the export format back into rows.
pub fn parse_answers_csv(text: &str) -> Result<Vec<IndicatorRow>, StorageError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| StorageError::Csv(e.to_string()))?.clone();
    let expected: Vec<&str> = CSV_HEADER.split(',').collect();
    if header.iter().collect::<Vec<_>>() != expected {
        return Err(StorageError::Csv(format!("header must be {CSV_HEADER:?}")));
    }
    let mut rows = Vec::new();
    for (line, record) in reader.deserialize::<IndicatorRow>().enumerate() {
        let row = record.map_err(|e| StorageError::Csv(e.to_string()))?;
        for v in [row.question_relevance, row.engagement, row.satisfaction] {
            if !v.is_finite() {
                return Err(StorageError::Csv(format!("row {}: non-finite score", line + 1)));
            }
        }
        rows.push(row);
    }
    Ok(rows)
}
