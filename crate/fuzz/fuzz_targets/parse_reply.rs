#![no_main]

use defuse_core::textio::{canonical_reply, parse_reply_with};
use defuse_core::world::Palette;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let palette = Palette::standard(3);
    let parsed = parse_reply_with(text, &palette);
    if !parsed.action.is_invalid() {
        let again = parse_reply_with(&canonical_reply(&parsed.action, "", &palette), &palette);
        assert_eq!(again.action, parsed.action);
    }
    let _ = defuse_core::epistemic::parse_yes_no(text);
});
