#![no_main]

use aiview_core::{validate_config, StudyConfig};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(config) = serde_json::from_slice::<StudyConfig>(data) else {
        return;
    };
    let report = validate_config(&config);
    if report.is_ok() {
        assert_eq!(report.total_quota, config.total_quota());
        assert!(config.total_quota() >= 1);
    }
});
