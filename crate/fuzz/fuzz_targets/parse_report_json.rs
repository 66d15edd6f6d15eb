#![no_main]

use blowup::cli::{parse_report_json, render_json};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    // A parsed report renders to a canonical form that is a fixed point.
    if let Ok(r) = parse_report_json(text) {
        let canonical = render_json(&r);
        assert_eq!(
            render_json(&parse_report_json(&canonical).unwrap()),
            canonical
        );
    }
});
