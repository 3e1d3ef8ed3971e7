#![no_main]

use kryres::qrc::QrcDataset;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(ds) = QrcDataset::from_text(text) {
        let again = QrcDataset::from_text(&ds.to_text()).expect("serialized dataset must parse");
        assert_eq!(again.to_text(), ds.to_text());
    }
});
