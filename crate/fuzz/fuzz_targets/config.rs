#![no_main]

use kryres_expcli::config::{ExperimentConfig, ExperimentId};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Some((&first, rest)) = data.split_first() else { return };
    let Ok(text) = std::str::from_utf8(rest) else { return };
    let e = ExperimentId::ALL[first as usize % ExperimentId::ALL.len()];
    if let Ok(cfg) = ExperimentConfig::parse(e, text) {
        let again = ExperimentConfig::parse(e, &cfg.canonical()).expect("canonical form must parse");
        assert_eq!(again.hash(), cfg.hash());
    }
});
