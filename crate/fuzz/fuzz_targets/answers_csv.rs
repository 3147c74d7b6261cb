#![no_main]

use aiview_core::analytics::analyze_study;
use aiview_core::storage::parse_answers_csv;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(rows) = parse_answers_csv(text) {
        assert!(rows.iter().all(|r| r.satisfaction.is_finite()));
    }
    if let Ok(report) = analyze_study(text) {
        assert!(report.n >= 4);
        let r2 = report.regression.r_squared;
        assert!(r2.is_nan() || (-1e-9..=1.0 + 1e-9).contains(&r2));
    }
});
