#![no_main]

use aiview_core::storage::TranscriptDocument;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(doc) = TranscriptDocument::from_json_slice(data) else {
        return;
    };
    let text = doc.to_json();
    let again = TranscriptDocument::from_json_slice(text.as_bytes()).expect("own output reloads");
    assert_eq!(again.to_json(), text);
    if let Ok(session) = doc.into_session() {
        assert!(session.check_invariants().is_ok());
    }
});
