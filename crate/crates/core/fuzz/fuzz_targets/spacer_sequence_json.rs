#![no_main]

use ergomix::SpacerSequence;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(seq) = SpacerSequence::from_json(text) {
        let again = SpacerSequence::from_json(&seq.to_json()).unwrap();
        assert_eq!(seq, again);
    }
});
