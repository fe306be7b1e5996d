#![no_main]

use defuse_core::harness::{decode_event, Transcript};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    for line in text.lines() {
        let _ = decode_event(line);
    }
    if let Ok(t) = Transcript::from_jsonl(text) {
        let _ = t.metrics();
        let _ = t.to_jsonl();
    }
});
