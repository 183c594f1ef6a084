#![no_main]

use libfuzzer_sys::fuzz_target;
use mbs_core::qubo::Qubo;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(q) = Qubo::from_text(text) else { return };
    if q.terms().all(|(_, c)| c.is_finite()) && q.offset().is_finite() {
        assert_eq!(Qubo::from_text(&q.to_text(None)).expect("round trip"), q);
    }
});
