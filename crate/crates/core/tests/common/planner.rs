//! Random instances from the desk-scale family.

use defuse_core::world::{AgentSpec, BombId, BombSpec, Color, RoomId, WorldConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// At most 3 rooms, 2 bombs, 2 agents and 8 rounds.
pub fn desk_instance(seed: u64) -> WorldConfig {
    instance(seed, 3, 2, 2, 8)
}

pub fn instance(
    seed: u64,
    max_rooms: u32,
    max_bombs: u32,
    max_agents: usize,
    max_h: u32,
) -> WorldConfig {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_rooms = rng.gen_range(1..=max_rooms);
    let n_colors = rng.gen_range(1..=3usize);
    let rooms: Vec<RoomId> = (0..n_rooms).map(RoomId).collect();
    let mut edges = Vec::new();
    for i in 1..n_rooms {
        edges.push((RoomId(rng.gen_range(0..i)), RoomId(i)));
    }
    if n_rooms >= 3 && rng.gen_bool(0.3) && !edges.contains(&(RoomId(1), RoomId(2))) {
        edges.push((RoomId(1), RoomId(2)));
    }
    let n_bombs = rng.gen_range(1..=max_bombs);
    let bombs = (1..=n_bombs)
        .map(|id| BombSpec {
            id: BombId(id),
            location: RoomId(rng.gen_range(0..n_rooms)),
            sequence: (0..rng.gen_range(1..=3))
                .map(|_| Color(rng.gen_range(0..n_colors as u8)))
                .collect(),
        })
        .collect();
    let n_agents = rng.gen_range(1..=max_agents);
    let agents = (0..n_agents)
        .map(|i| {
            let mut tools: Vec<Color> = (0..n_colors as u8)
                .filter(|_| rng.gen_bool(0.6))
                .map(Color)
                .collect();
            if tools.is_empty() {
                tools.push(Color(rng.gen_range(0..n_colors as u8)));
            }
            AgentSpec {
                call_sign: ["Alpha", "Bravo", "Charlie"][i].to_string(),
                start: RoomId(rng.gen_range(0..n_rooms)),
                tools,
            }
        })
        .collect();
    WorldConfig {
        n_rooms: n_rooms as usize,
        n_colors,
        rooms,
        edges,
        bombs,
        agents,
        round_limit: rng.gen_range(3..=max_h),
        deadlock_window: 3,
        apply_mode: Default::default(),
        seed,
        color_names: None,
    }
}
