#![no_main]

use blowup::algebra::parse_polynomial;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    // Anything that parses must survive a display round trip.
    if let Ok(p) = parse_polynomial(text) {
        assert_eq!(parse_polynomial(&p.to_string()).unwrap(), p);
    }
});
