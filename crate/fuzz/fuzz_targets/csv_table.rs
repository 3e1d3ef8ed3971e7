#![no_main]

use kryres_expcli::table::Table;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(t) = Table::parse(text) {
        for c in t.columns.clone() {
            let _ = t.numeric_column(&c);
        }
        let _ = Table::parse(&t.to_csv());
    }
});
