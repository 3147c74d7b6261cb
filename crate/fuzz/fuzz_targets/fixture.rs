#![no_main]

use aiview_core::ScriptedBackend;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = ScriptedBackend::from_json(text);
    }
});
