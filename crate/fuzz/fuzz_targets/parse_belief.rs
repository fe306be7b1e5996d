#![no_main]

use defuse_core::belief::{parse_belief, BeliefDoc};
use defuse_core::world::Palette;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let palette = Palette::standard(3);
    let parsed = parse_belief(text, &palette);
    let _ = parsed.doc.render(&palette);
    let _ = BeliefDoc::from_json(text);
});
