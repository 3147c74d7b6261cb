//! Runs the checked-in fuzz seeds through their entry points on stable.

use std::path::PathBuf;

use aiview_core::analytics::analyze_study;
use aiview_core::domain::{ExpertiseLevel, Priority, ResearchArea};
use aiview_core::llm::decode_completion;
use aiview_core::prompts::{
    parse_expertise, parse_initial_question, parse_iterative_turn, parse_system_prompt, parse_uniqueness,
};
use aiview_core::storage::{parse_answers_csv, TranscriptDocument};
use aiview_core::{validate_config, ScriptedBackend, StudyConfig};

fn seeds(target: &str) -> Vec<(String, Vec<u8>)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<_> = std::fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| {
            let path = e.unwrap().path();
            (path.display().to_string(), std::fs::read(&path).unwrap())
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds for {target}");
    out
}

#[test]
fn stage_output_seeds() {
    let area = ResearchArea {
        name: "area".into(),
        priority: Priority::High,
        question_quota: 2,
    };
    let mut accepted = 0;
    for (_, bytes) in seeds("stage_outputs") {
        let raw = String::from_utf8(bytes).unwrap();
        accepted += [
            parse_system_prompt(&raw).is_ok(),
            parse_initial_question(&raw, "area").is_ok(),
            parse_expertise(&raw).is_ok(),
            parse_iterative_turn(&raw, &area, ExpertiseLevel::Novice).is_ok(),
            parse_uniqueness(&raw, 3).is_ok(),
        ]
        .iter()
        .filter(|ok| **ok)
        .count();
    }
    assert!(accepted > 0);
}

#[test]
fn completion_body_seeds() {
    let results: Vec<_> = seeds("completion_body")
        .into_iter()
        .map(|(_, b)| decode_completion(&String::from_utf8(b).unwrap()).is_ok())
        .collect();
    assert!(results.contains(&true) && results.contains(&false));
}

#[test]
fn transcript_seeds_round_trip() {
    for (name, bytes) in seeds("transcript") {
        let doc = TranscriptDocument::from_json_slice(&bytes).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(doc.to_json().as_bytes(), bytes.as_slice(), "{name}");
        doc.into_session().unwrap();
    }
}

#[test]
fn csv_seeds() {
    for (name, bytes) in seeds("answers_csv") {
        let text = String::from_utf8(bytes).unwrap();
        let parsed = parse_answers_csv(&text);
        let report = analyze_study(&text);
        if name.ends_with("small.csv") {
            assert_eq!(parsed.unwrap().len(), 4);
            assert_eq!(report.unwrap().n, 4);
        } else {
            assert!(report.is_err(), "{name}");
        }
    }
}

#[test]
fn fixture_seeds() {
    for (name, bytes) in seeds("fixture") {
        let result = ScriptedBackend::from_json(&String::from_utf8(bytes).unwrap());
        assert_eq!(result.is_ok(), !name.ends_with("bad-stage.json"), "{name}");
    }
}

#[test]
fn config_seeds() {
    for (name, bytes) in seeds("study_config") {
        let config: StudyConfig = serde_json::from_slice(&bytes).unwrap();
        assert_eq!(validate_config(&config).is_ok(), name.ends_with("llm-workplace.json"), "{name}");
    }
}
