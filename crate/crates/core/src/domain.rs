//! Shared interview types, study-configuration validation and the
//! priority/quota scheduling policy.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::llm::Stage;
use crate::storage::SurveyResponse;

/// Research-area priority. Ordered `Low < Medium < High`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Priority {
    Low,
    Medium,
    High,
}

impl fmt::Display for Priority {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Priority::Low => "Low",
            Priority::Medium => "Medium",
            Priority::High => "High",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResearchArea {
    pub name: String,
    pub priority: Priority,
    pub question_quota: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub study_title: String,
    pub objective: String,
    pub research_areas: Vec<ResearchArea>,
    /// Things the interviewer must never do.
    #[serde(default)]
    pub ethics_rules: Vec<String>,
    pub tone: String,
    pub interview_language: String,
}

const CASE_STUDY_JSON: &str = include_str!("../../../configs/llm-workplace.json");

impl StudyConfig {
    /// The shipped case-study configuration: employee interaction with LLMs
    /// in the workplace, five areas, 16 questions.
    pub fn llm_workplace_case_study() -> Self {
        serde_json::from_str(CASE_STUDY_JSON).expect("bundled case-study config is valid JSON")
    }

    pub fn total_quota(&self) -> u32 {
        self.research_areas.iter().map(|a| a.question_quota).sum()
    }

    pub fn area(&self, name: &str) -> Option<&ResearchArea> {
        self.research_areas.iter().find(|a| a.name == name)
    }
}

/// A single broken configuration rule.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub field: String,
    pub rule: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.rule)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    pub area_count: usize,
    pub total_quota: u32,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            return write!(f, "ok, {} areas, {} questions", self.area_count, self.total_quota);
        }
        let parts: Vec<String> = self.violations.iter().map(ToString::to_string).collect();
        write!(f, "invalid: {}", parts.join("; "))
    }
}

/// Checks every [`StudyConfig`] invariant. Violations are returned as data.
pub fn validate_config(config: &StudyConfig) -> ValidationReport {
    let mut violations = Vec::new();
    let mut push = |field: &str, rule: &str| {
        violations.push(Violation {
            field: field.to_string(),
            rule: rule.to_string(),
        })
    };

    if config.study_title.trim().is_empty() {
        push("study_title", "must not be empty");
    }
    if config.research_areas.is_empty() {
        push("research_areas", "at least one required");
    }
    let mut seen = HashSet::new();
    for (i, area) in config.research_areas.iter().enumerate() {
        let field = format!("research_areas[{i}]");
        if area.name.trim().is_empty() {
            push(&format!("{field}.name"), "must not be empty");
        }
        if !seen.insert(area.name.as_str()) {
            push(&format!("{field}.name"), "name unique");
        }
        if area.question_quota < 1 {
            push(&format!("{field}.question_quota"), "must be at least 1");
        }
    }
    let total_quota = config
        .research_areas
        .iter()
        .fold(0u32, |acc, a| acc.saturating_add(a.question_quota));
    if !config.research_areas.is_empty() && total_quota < 1 {
        push("research_areas", "total quota must be at least 1");
    }

    ValidationReport {
        violations,
        area_count: config.research_areas.len(),
        total_quota,
    }
}

/// Four-level expertise rubric, ordered from least to most expert.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ExpertiseLevel {
    Novice,
    BasicKnowledge,
    AdvancedKnowledge,
    Expert,
}

impl ExpertiseLevel {
    pub const ALL: [ExpertiseLevel; 4] = [
        ExpertiseLevel::Novice,
        ExpertiseLevel::BasicKnowledge,
        ExpertiseLevel::AdvancedKnowledge,
        ExpertiseLevel::Expert,
    ];

    /// Rubric label as presented to the model.
    pub fn label(self) -> &'static str {
        match self {
            ExpertiseLevel::Novice => "Novice",
            ExpertiseLevel::BasicKnowledge => "Basic Knowledge",
            ExpertiseLevel::AdvancedKnowledge => "Advanced Knowledge",
            ExpertiseLevel::Expert => "Expert",
        }
    }

    /// Case-insensitive parse that accepts both `BasicKnowledge` and
    /// `Basic Knowledge` style spellings.
    pub fn parse_label(raw: &str) -> Option<Self> {
        let key: String = raw
            .chars()
            .filter(|c| !c.is_whitespace() && *c != '_' && *c != '-')
            .flat_map(char::to_lowercase)
            .collect();
        match key.as_str() {
            "novice" => Some(ExpertiseLevel::Novice),
            "basicknowledge" => Some(ExpertiseLevel::BasicKnowledge),
            "advancedknowledge" => Some(ExpertiseLevel::AdvancedKnowledge),
            "expert" => Some(ExpertiseLevel::Expert),
            _ => None,
        }
    }
}

impl fmt::Display for ExpertiseLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Question {
    pub text: String,
    pub area_name: String,
    pub justification: String,
    pub target_expertise: ExpertiseLevel,
}

/// One question/answer turn.
///
/// `response_message` and `transition_message` are the interviewer's
/// acknowledgement of the previous answer that preceded this question; both
/// are empty for the opening question.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exchange {
    pub index: usize,
    pub question: Question,
    pub answer: String,
    pub response_message: String,
    pub transition_message: String,
    pub expertise_before: ExpertiseLevel,
    pub expertise_after: Option<ExpertiseLevel>,
    pub expertise_rationale: String,
    pub uniqueness_retries: u32,
    /// Set when the retry budget ran out while the judge still reported a
    /// duplicate; the last candidate was kept.
    pub uniqueness_unresolved: bool,
    pub asked_at: DateTime<Utc>,
    pub answered_at: Option<DateTime<Utc>>,
}

impl Exchange {
    pub fn is_answered(&self) -> bool {
        !self.answer.trim().is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SessionStatus {
    Created,
    InProgress,
    Completed,
    Aborted,
}

impl SessionStatus {
    pub fn can_transition_to(self, next: SessionStatus) -> bool {
        use SessionStatus::*;
        matches!(
            (self, next),
            (Created, InProgress) | (InProgress, Completed) | (InProgress, Aborted)
        )
    }
}

/// Pipeline stage that made a session fail.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailureRecord {
    pub stage: Stage,
    pub error: String,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DomainError {
    #[error("unknown research area {0:?}")]
    UnknownArea(String),
    #[error("quota exhausted for research area {0:?}")]
    QuotaExhausted(String),
    #[error("illegal status transition {from:?} -> {to:?}")]
    IllegalTransition { from: SessionStatus, to: SessionStatus },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Session {
    pub session_id: String,
    pub config: StudyConfig,
    pub system_prompt: String,
    pub exchanges: Vec<Exchange>,
    pub remaining_quota: BTreeMap<String, u32>,
    pub current_expertise: ExpertiseLevel,
    pub status: SessionStatus,
    pub created_at: DateTime<Utc>,
    pub failure: Option<FailureRecord>,
    pub survey: Option<SurveyResponse>,
}

impl Session {
    /// Fresh session with full quotas and a random identifier.
    pub fn new(config: StudyConfig) -> Self {
        Self::with_id(uuid::Uuid::new_v4().to_string(), config, Utc::now())
    }

    pub fn with_id(session_id: String, config: StudyConfig, created_at: DateTime<Utc>) -> Self {
        let remaining_quota = config
            .research_areas
            .iter()
            .map(|a| (a.name.clone(), a.question_quota))
            .collect();
        Self {
            session_id,
            config,
            system_prompt: String::new(),
            exchanges: Vec::new(),
            remaining_quota,
            current_expertise: ExpertiseLevel::Novice,
            status: SessionStatus::Created,
            created_at,
            failure: None,
            survey: None,
        }
    }

    pub fn total_remaining(&self) -> u32 {
        self.remaining_quota.values().sum()
    }

    /// First area, in config order, among those of the highest priority that
    /// still has quota.
    pub fn next_area(&self) -> Option<&ResearchArea> {
        let remaining = |a: &ResearchArea| self.remaining_quota.get(&a.name).copied().unwrap_or(0);
        let top = self
            .config
            .research_areas
            .iter()
            .filter(|a| remaining(a) > 0)
            .map(|a| a.priority)
            .max()?;
        self.config
            .research_areas
            .iter()
            .find(|a| a.priority == top && remaining(a) > 0)
    }

    pub fn decrement_quota(&mut self, area_name: &str) -> Result<(), DomainError> {
        let slot = self
            .remaining_quota
            .get_mut(area_name)
            .ok_or_else(|| DomainError::UnknownArea(area_name.to_string()))?;
        if *slot == 0 {
            return Err(DomainError::QuotaExhausted(area_name.to_string()));
        }
        *slot -= 1;
        Ok(())
    }

    pub fn transition(&mut self, next: SessionStatus) -> Result<(), DomainError> {
        if !self.status.can_transition_to(next) {
            return Err(DomainError::IllegalTransition {
                from: self.status,
                to: next,
            });
        }
        self.status = next;
        Ok(())
    }

    /// The exchange whose question is still waiting for an answer.
    pub fn pending_exchange(&self) -> Option<&Exchange> {
        self.exchanges.last().filter(|e| !e.is_answered())
    }

    pub fn answered_exchanges(&self) -> impl Iterator<Item = &Exchange> {
        self.exchanges.iter().filter(|e| e.is_answered())
    }

    /// Checks every session invariant, returning a description of each
    /// violation.
    pub fn check_invariants(&self) -> Result<(), Vec<String>> {
        let mut problems = Vec::new();

        let mut asked: BTreeMap<&str, u32> = BTreeMap::new();
        for e in &self.exchanges {
            *asked.entry(e.question.area_name.as_str()).or_default() += 1;
        }
        for name in asked.keys() {
            if self.config.area(name).is_none() {
                problems.push(format!("exchange references unknown area {name:?}"));
            }
        }
        for area in &self.config.research_areas {
            let used = asked.get(area.name.as_str()).copied().unwrap_or(0);
            match self.remaining_quota.get(&area.name) {
                None => problems.push(format!("remaining_quota missing area {:?}", area.name)),
                Some(&left) if u64::from(left) + u64::from(used) != u64::from(area.question_quota) => {
                    problems.push(format!(
                        "quota for {:?}: remaining {left} + asked {used} != quota {}",
                        area.name, area.question_quota
                    ))
                }
                Some(_) => {}
            }
        }
        if self.remaining_quota.len() != self.config.research_areas.len() {
            problems.push("remaining_quota has entries for unknown areas".to_string());
        }

        for (pos, e) in self.exchanges.iter().enumerate() {
            if e.index != pos {
                problems.push(format!("exchange at position {pos} has index {}", e.index));
            }
            if e.expertise_after.is_some() != e.is_answered() {
                problems.push(format!("exchange {pos}: expertise_after set without an answer"));
            }
            if pos + 1 < self.exchanges.len() && !e.is_answered() {
                problems.push(format!("exchange {pos} is unanswered but not last"));
            }
        }
        let mut expected_before = ExpertiseLevel::Novice;
        for e in &self.exchanges {
            if e.expertise_before != expected_before {
                problems.push(format!(
                    "exchange {}: expertise_before {:?} does not chain from {:?}",
                    e.index, e.expertise_before, expected_before
                ));
            }
            if let Some(after) = e.expertise_after {
                expected_before = after;
            }
        }
        if self.current_expertise != expected_before {
            problems.push(format!(
                "current_expertise {:?} differs from last assessed level {:?}",
                self.current_expertise, expected_before
            ));
        }

        if problems.is_empty() {
            Ok(())
        } else {
            Err(problems)
        }
    }
}
