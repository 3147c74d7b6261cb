//! Builder for scripted-backend fixtures.

use serde_json::json;

use crate::domain::ExpertiseLevel;
use crate::llm::{FixtureRecord, ScriptedBackend, Stage};

/// Ordered list of canned stage replies.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FixtureScript {
    records: Vec<FixtureRecord>,
}

impl FixtureScript {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn raw(mut self, stage: Stage, response: impl Into<String>) -> Self {
        self.records.push(FixtureRecord {
            stage,
            response: response.into(),
        });
        self
    }

    pub fn system_prompt(self) -> Self {
        let reply = json!({
            "identity": "You are a professional qualitative research interviewer.",
            "objective": "Conduct a semi-structured interview following the study's research areas.",
            "tone": "neutral, friendly and non-judgmental",
            "ethics_rules": ["never request personally identifying data"],
            "research_areas": [],
            "output_rules": ["Reply with exactly one JSON object."],
        });
        self.raw(Stage::M1, reply.to_string())
    }

    pub fn initial_question(self, question: &str) -> Self {
        let reply = json!({
            "question": question,
            "justification": "A simple opener that any participant can answer.",
        });
        self.raw(Stage::M2, reply.to_string())
    }

    pub fn expertise(self, level: ExpertiseLevel) -> Self {
        let reply = json!({
            "level": level.label(),
            "rationale": format!("Answers so far read as {}.", level.label()),
        });
        self.raw(Stage::M3, reply.to_string())
    }

    pub fn turn(self, question: &str) -> Self {
        self.turn_with_response("Thanks, that is a helpful example.", question)
    }

    pub fn turn_with_response(self, response: &str, question: &str) -> Self {
        let reply = json!({
            "response_message": response,
            "transition_message": "Let's build on that a little further.",
            "question": question,
            "justification": "Follows up on the last answer within the scheduled research area.",
        });
        self.raw(Stage::M4, reply.to_string())
    }

    pub fn unique(self) -> Self {
        self.raw(
            Stage::M5,
            json!({"verdict": "Unique", "rationale": "Covers a new aspect."}).to_string(),
        )
    }

    pub fn duplicate(self, of_index: usize) -> Self {
        self.raw(
            Stage::M5,
            json!({"verdict": "Duplicate", "duplicate_of_index": of_index, "rationale": "Same concept reworded."})
                .to_string(),
        )
    }

    /// A complete interview of `total_questions` turns. `levels[i]` is the
    /// assessment after answer `i`; the last level repeats when short.
    pub fn full_run(total_questions: usize, levels: &[ExpertiseLevel]) -> Self {
        let level_at = |i: usize| {
            levels
                .get(i)
                .or(levels.last())
                .copied()
                .unwrap_or(ExpertiseLevel::Novice)
        };
        let mut script = Self::new()
            .system_prompt()
            .initial_question("Can you describe a situation where you have heard of or used a Large Language Model?");
        for i in 0..total_questions {
            script = script.expertise(level_at(i));
            if i + 1 < total_questions {
                script = script
                    .turn(&format!("Follow-up {}: what has your experience been with this aspect?", i + 1))
                    .unique();
            }
        }
        script
    }

    pub fn records(&self) -> &[FixtureRecord] {
        &self.records
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.records).expect("records serialize")
    }

    pub fn into_backend(self) -> ScriptedBackend {
        ScriptedBackend::new(self.records)
    }
}
