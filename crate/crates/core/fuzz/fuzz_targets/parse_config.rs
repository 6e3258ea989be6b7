#![no_main]

use ergomix::cli::{parse_config, RunConfig};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(config) = parse_config(text) {
        let echoed = serde_json::to_string(&config).unwrap();
        let again: RunConfig = parse_config(&echoed).unwrap();
        assert_eq!(config, again);
    }
});
