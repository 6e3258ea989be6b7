#![no_main]

use ergomix::tower::build_word;
use ergomix::{ConstructionParams, StagePlan};
use libfuzzer_sys::fuzz_target;

// Layout: h1, stage count, then per stage a cut count followed by that many
// spacers; the trailing eight bytes (if present) pick the position.
fuzz_target!(|data: &[u8]| {
    let mut bytes = data.iter().copied();
    let Some(h1) = bytes.next() else { return };
    let Some(count) = bytes.next() else { return };
    let mut stages = Vec::new();
    for _ in 0..count % 4 {
        let Some(cuts) = bytes.next() else { return };
        let s: Vec<u64> = bytes
            .by_ref()
            .take(cuts as usize % 8 + 2)
            .map(|b| (b % 16) as u64)
            .collect();
        stages.push(StagePlan::Explicit { s });
    }
    let params = ConstructionParams::new((h1 % 32) as u64, stages).with_guard(1 << 20);
    let Ok(word) = build_word(&params) else { return };
    let rest: Vec<u8> = bytes.collect();
    let mut pick = [0u8; 8];
    for (dst, src) in pick.iter_mut().zip(&rest) {
        *dst = *src;
    }
    let t = u64::from_le_bytes(pick) % (word.len() + 2);
    for j0 in 1..=word.stages() + 1 {
        match word.decode_position(t, j0) {
            Ok(addr) => assert_eq!(word.encode_position(&addr).unwrap(), t),
            Err(_) => assert!(t >= word.len()),
        }
    }
});
