#![no_main]

use kryres::circuits::parse_circuit;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(c) = parse_circuit(text) {
        let again = parse_circuit(&c.to_text()).expect("serialized circuit must parse");
        assert_eq!(again.to_text(), c.to_text());
    }
});
