#![no_main]

use libfuzzer_sys::fuzz_target;
use mbs_core::instance::Instance;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(instance) = Instance::from_json(text) else { return };
    let json = instance.to_json().expect("serialize");
    assert_eq!(Instance::from_json(&json).expect("round trip"), instance);
});
