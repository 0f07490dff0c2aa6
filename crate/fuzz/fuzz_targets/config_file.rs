#![no_main]
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(config) = slidedict::config::Config::parse_str(text) {
            let _ = config.window_spec();
            let _ = config.eval_params();
            let _ = config.split_rule();
            let _ = config.lambda();
            let _ = config.synth_spec();
        }
    }
});
