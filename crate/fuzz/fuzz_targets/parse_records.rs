#![no_main]

use libfuzzer_sys::fuzz_target;
use mbs_core::instance::{build_instance, parse_records, write_records, Scaling};

fuzz_target!(|data: &[u8]| {
    let Ok(records) = parse_records(data) else { return };
    let mut out = Vec::new();
    write_records(&records, &mut out).expect("writing parsed records");
    let again = parse_records(out.as_slice()).expect("reparse");
    assert_eq!(records.len(), again.len());
    let _ = build_instance(&records, Scaling::Auto);
});
