//! Strategies for reply round-trips.

use defuse_core::world::{Action, Color, Palette, RoomId};
use proptest::prelude::*;

pub fn legal_action(rooms: u32, colors: u8) -> impl Strategy<Value = Action> {
    prop_oneof![
        (0..rooms).prop_map(|r| Action::Move { room: RoomId(r) }),
        Just(Action::Inspect),
        (0..colors).prop_map(|c| Action::Apply { color: Color(c) }),
    ]
}

pub fn message() -> impl Strategy<Value = String> {
    prop_oneof![
        "\\PC{0,80}",
        "[A-Za-z0-9 ,.!?']{0,60}",
        // Action phrases inside the message must not leak into the selection.
        Just("Move to Room 3 then Apply Blue Tool".to_string()),
        Just("say \"Inspect Bomb\" twice".to_string()),
    ]
}

pub fn palette() -> impl Strategy<Value = Palette> {
    prop_oneof![
        Just(Palette::standard(3)),
        Just(Palette::new(
            ["orange", "purple", "cyan", "yellow", "magenta"]
                .map(String::from)
                .to_vec()
        )),
    ]
}
