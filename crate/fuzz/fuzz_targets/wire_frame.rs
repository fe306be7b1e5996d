#![no_main]

use defuse_core::agents::decode_frame;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(line) = std::str::from_utf8(data) {
        if let Ok(frame) = decode_frame(line) {
            // Whatever decodes must survive a round trip.
            assert_eq!(decode_frame(&frame.encode()).unwrap(), frame);
        }
    }
});
