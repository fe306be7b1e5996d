#![no_main]

use defuse_core::world::{new_world, WorldConfig};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(config) = serde_json::from_slice::<WorldConfig>(data) else {
        return;
    };
    if let Ok(state) = new_world(config) {
        for agent in 0..state.agents().len() {
            let _ = state.legal_actions(defuse_core::world::AgentId(agent));
        }
        let _ = state.check_termination();
    }
});
