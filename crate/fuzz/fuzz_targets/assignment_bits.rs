#![no_main]

use libfuzzer_sys::fuzz_target;
use mbs_core::qubo::Assignment;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(x) = text.parse::<Assignment>() else { return };
    assert_eq!(x.to_string().parse::<Assignment>().expect("round trip"), x);
});
