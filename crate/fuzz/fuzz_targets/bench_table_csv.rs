#![no_main]

use libfuzzer_sys::fuzz_target;
use mbs_core::bench::{parse_table_csv, ratio_summary};

fuzz_target!(|data: &[u8]| {
    let Ok(rows) = parse_table_csv(data) else { return };
    let _ = ratio_summary(&rows, "cim");
});
