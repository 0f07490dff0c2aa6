#![no_main]
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(model) = slidedict::model::Model::from_bytes(data) {
        // accepted containers must re-serialize to the same bytes
        assert_eq!(model.to_bytes(), data);
    }
});
