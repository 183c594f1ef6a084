#![no_main]

use libfuzzer_sys::fuzz_target;
use mbs_core::bench::{ratio_summary, BenchResult};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(result) = BenchResult::from_json(text) else { return };
    let _ = ratio_summary(&result.table(), "cim");
});
