#![no_main]

use aiview_core::llm::decode_completion;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(body) = std::str::from_utf8(data) {
        if let Ok(content) = decode_completion(body) {
            assert_eq!(content.trim_end(), content);
        }
    }
});
