use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::world::{
    AgentSpec, ApplyMode, BombId, BombSpec, Color, RoomId, WorldConfig, DEFAULT_COLOR_NAMES,
    DEFAULT_DEADLOCK_WINDOW, DEFAULT_ROUND_LIMIT,
};

pub const CALL_SIGNS: [&str; 8] = [
    "Alpha", "Bravo", "Charlie", "Delta", "Echo", "Foxtrot", "Golf", "Hotel",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ToolScheme {
    /// Agent `i` holds colors `i` and `i + 1` modulo the color count.
    #[default]
    Pairwise,
    /// Every agent holds every color.
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StartScheme {
    /// The whole team starts in one random room.
    #[default]
    Together,
    /// Each agent starts in its own random room.
    Scattered,
}

/// Instance randomization parameters. Defaults match the five-room, five-bomb evaluation set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RandomizationSpec {
    pub n_rooms: usize,
    /// Probability of each non-tree edge on top of a random spanning tree.
    pub edge_density: f64,
    /// Phase counts, one bomb per entry.
    pub bomb_sizes: Vec<usize>,
    pub n_colors: usize,
    pub n_agents: usize,
    pub tool_scheme: ToolScheme,
    pub start: StartScheme,
    pub max_bombs_per_room: usize,
    pub round_limit: u32,
    pub deadlock_window: u32,
    pub apply_mode: ApplyMode,
    /// Required when `n_colors` exceeds the red/green/blue default.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub color_names: Option<Vec<String>>,
}

impl Default for RandomizationSpec {
    fn default() -> Self {
        RandomizationSpec {
            n_rooms: 5,
            edge_density: 0.3,
            bomb_sizes: vec![1, 1, 2, 2, 3],
            n_colors: 3,
            n_agents: 3,
            tool_scheme: ToolScheme::Pairwise,
            start: StartScheme::Together,
            max_bombs_per_room: 1,
            round_limit: DEFAULT_ROUND_LIMIT,
            deadlock_window: DEFAULT_DEADLOCK_WINDOW,
            apply_mode: ApplyMode::Guarded,
            color_names: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenError {
    #[error("need at least one room, one color and one agent")]
    Empty,
    #[error("{agents} agents but only {max} call signs")]
    TooManyAgents { agents: usize, max: usize },
    #[error("{bombs} bombs do not fit in {rooms} rooms at {per_room} per room")]
    NoSpace {
        bombs: usize,
        rooms: usize,
        per_room: usize,
    },
    #[error("tools cover {covered} of {colors} colors")]
    Coverage { covered: usize, colors: usize },
    #[error("edge density {0} is outside [0, 1]")]
    Density(String),
    #[error("{colors} colors need {colors} color names")]
    Palette { colors: usize },
}

impl RandomizationSpec {
    pub fn validate(&self) -> Result<(), GenError> {
        if self.n_rooms == 0 || self.n_colors == 0 || self.n_agents == 0 {
            return Err(GenError::Empty);
        }
        if self.n_agents > CALL_SIGNS.len() {
            return Err(GenError::TooManyAgents {
                agents: self.n_agents,
                max: CALL_SIGNS.len(),
            });
        }
        if !(0.0..=1.0).contains(&self.edge_density) {
            return Err(GenError::Density(self.edge_density.to_string()));
        }
        if self.bomb_sizes.len() > self.n_rooms * self.max_bombs_per_room {
            return Err(GenError::NoSpace {
                bombs: self.bomb_sizes.len(),
                rooms: self.n_rooms,
                per_room: self.max_bombs_per_room,
            });
        }
        let named = match &self.color_names {
            Some(names) => names.len() == self.n_colors,
            None => self.n_colors <= DEFAULT_COLOR_NAMES.len(),
        };
        if !named {
            return Err(GenError::Palette {
                colors: self.n_colors,
            });
        }
        let covered = (0..self.n_colors)
            .filter(|c| (0..self.n_agents).any(|a| self.tools(a).contains(&Color(*c as u8))))
            .count();
        if covered < self.n_colors {
            return Err(GenError::Coverage {
                covered,
                colors: self.n_colors,
            });
        }
        Ok(())
    }

    fn tools(&self, agent: usize) -> Vec<Color> {
        match self.tool_scheme {
            ToolScheme::All => (0..self.n_colors).map(|c| Color(c as u8)).collect(),
            ToolScheme::Pairwise => {
                let mut t = vec![Color((agent % self.n_colors) as u8)];
                let next = Color(((agent + 1) % self.n_colors) as u8);
                if !t.contains(&next) {
                    t.push(next);
                }
                t
            }
        }
    }
}

/// Connected random map, bombs placed uniformly with a per-room cap, sequences uniform over
/// colors. The seed determines everything.
pub fn generate_instance(spec: &RandomizationSpec, seed: u64) -> Result<WorldConfig, GenError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = spec.n_rooms as u32;
    let rooms: Vec<RoomId> = (0..n).map(RoomId).collect();

    let mut order: Vec<u32> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut edges: Vec<(RoomId, RoomId)> = Vec::new();
    let norm = |a: u32, b: u32| (RoomId(a.min(b)), RoomId(a.max(b)));
    for i in 1..order.len() {
        let j = rng.gen_range(0..i);
        edges.push(norm(order[i], order[j]));
    }
    for a in 0..n {
        for b in a + 1..n {
            let e = norm(a, b);
            if !edges.contains(&e) && rng.gen_bool(spec.edge_density) {
                edges.push(e);
            }
        }
    }
    edges.sort();

    let mut load = vec![0usize; spec.n_rooms];
    let bombs = spec
        .bomb_sizes
        .iter()
        .enumerate()
        .map(|(i, &size)| {
            let open: Vec<usize> = (0..spec.n_rooms)
                .filter(|r| load[*r] < spec.max_bombs_per_room)
                .collect();
            let room = *open.choose(&mut rng).expect("capacity checked");
            load[room] += 1;
            BombSpec {
                id: BombId(i as u32 + 1),
                location: RoomId(room as u32),
                sequence: (0..size)
                    .map(|_| Color(rng.gen_range(0..spec.n_colors) as u8))
                    .collect(),
            }
        })
        .collect();

    let shared = RoomId(rng.gen_range(0..n));
    let agents = (0..spec.n_agents)
        .map(|a| AgentSpec {
            call_sign: CALL_SIGNS[a].to_string(),
            start: match spec.start {
                StartScheme::Together => shared,
                StartScheme::Scattered => RoomId(rng.gen_range(0..n)),
            },
            tools: spec.tools(a),
        })
        .collect();

    Ok(WorldConfig {
        n_rooms: spec.n_rooms,
        n_colors: spec.n_colors,
        rooms,
        edges,
        bombs,
        agents,
        round_limit: spec.round_limit,
        deadlock_window: spec.deadlock_window,
        apply_mode: spec.apply_mode,
        seed,
        color_names: spec.color_names.clone(),
    })
}
