//! Metrics CSV parsing must reject arbitrary input with an error, never a panic.
#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = qdbench::runner::parse_metrics_csv("fuzz.csv", text);
    }
});
