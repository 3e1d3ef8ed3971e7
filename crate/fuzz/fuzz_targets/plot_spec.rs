#![no_main]

use kryres_expcli::plot::{render_svg, PlotSpec};
use kryres_expcli::table::Table;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let (spec, csv) = text.split_once("\n---\n").unwrap_or((text, "x,y\n0,1\n1,2\n"));
    if let (Ok(spec), Ok(table)) = (PlotSpec::parse(spec), Table::parse(csv)) {
        let _ = render_svg(&table, &spec);
    }
});
