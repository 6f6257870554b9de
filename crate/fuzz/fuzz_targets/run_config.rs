#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(cfg) = frrd::config::RunConfig::from_json_str(text) {
            let again = frrd::config::RunConfig::from_json_str(&cfg.to_json_string()).expect("round trip");
            assert_eq!(again.to_json_string(), cfg.to_json_string());
        }
    }
});
