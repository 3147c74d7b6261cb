#![no_main]

use aiview_core::domain::{ExpertiseLevel, Priority, ResearchArea};
use aiview_core::prompts::{
    extract_json_object, parse_expertise, parse_initial_question, parse_iterative_turn, parse_system_prompt,
    parse_uniqueness, word_count, RESPONSE_MESSAGE_MAX_WORDS,
};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(raw) = std::str::from_utf8(data) else {
        return;
    };
    if let Some(obj) = extract_json_object(raw) {
        assert!(raw.contains(obj));
    }
    let _ = parse_system_prompt(raw);
    if let Ok(q) = parse_initial_question(raw, "area") {
        assert!(q.text.trim_end().ends_with('?'));
    }
    let _ = parse_expertise(raw);
    let area = ResearchArea {
        name: "area".into(),
        priority: Priority::High,
        question_quota: 2,
    };
    if let Ok(turn) = parse_iterative_turn(raw, &area, ExpertiseLevel::Novice) {
        assert!(word_count(&turn.response_message) <= RESPONSE_MESSAGE_MAX_WORDS);
        assert_eq!(turn.question.area_name, "area");
    }
    for prior in [0, 1, 5] {
        if let Ok(v) = parse_uniqueness(raw, prior) {
            assert!(v.duplicate_of_index.is_none_or(|i| i < prior));
        }
    }
});
