#![no_main]

use blowup::cli::parse_batch_line;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(Some((j, p))) = parse_batch_line(text) {
        let again = parse_batch_line(&format!("{j}; {p}")).unwrap();
        assert_eq!(again, Some((j, p)));
    }
});
