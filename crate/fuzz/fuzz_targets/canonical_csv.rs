#![no_main]
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(frames) = slidedict::data::parse_canonical_csv(text) {
            // anything that parses must survive a write/parse round trip
            let written = slidedict::data::write_canonical_csv(&frames).unwrap();
            let back = slidedict::data::parse_canonical_csv(&written).unwrap();
            assert_eq!(frames.len(), back.len());
        }
    }
});
