use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::ids::{BombId, Color, Palette, RoomId};

pub const DEFAULT_ROUND_LIMIT: u32 = 30;
pub const DEFAULT_DEADLOCK_WINDOW: u32 = 3;

/// What happens when a tool is applied out of sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ApplyMode {
    /// The cut is refused with a corrective error and nothing changes.
    #[default]
    Guarded,
    /// The bomb explodes and is permanently lost.
    Explosive,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BombSpec {
    pub id: BombId,
    pub location: RoomId,
    pub sequence: Vec<Color>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentSpec {
    pub call_sign: String,
    pub start: RoomId,
    /// Owned cutters. Order is preserved for prompt rendering; duplicates are rejected.
    pub tools: Vec<Color>,
}

/// Fully specified task instance. The JSON form mirrors this struct field for field.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorldConfig {
    pub n_rooms: usize,
    pub n_colors: usize,
    pub rooms: Vec<RoomId>,
    pub edges: Vec<(RoomId, RoomId)>,
    pub bombs: Vec<BombSpec>,
    pub agents: Vec<AgentSpec>,
    #[serde(default = "default_round_limit")]
    pub round_limit: u32,
    /// Consecutive identical rounds that count as a deadlock; 0 disables detection.
    #[serde(default = "default_deadlock_window")]
    pub deadlock_window: u32,
    #[serde(default)]
    pub apply_mode: ApplyMode,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub color_names: Option<Vec<String>>,
}

fn default_round_limit() -> u32 {
    DEFAULT_ROUND_LIMIT
}

fn default_deadlock_window() -> u32 {
    DEFAULT_DEADLOCK_WINDOW
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("n_rooms is {declared} but {listed} rooms are listed")]
    RoomCountMismatch { declared: usize, listed: usize },
    #[error("room {0} is listed twice")]
    DuplicateRoom(RoomId),
    #[error("{context} refers to unlisted room {room}")]
    UnknownRoom { context: String, room: RoomId },
    #[error("edge {0}-{0} is a self loop")]
    SelfLoop(RoomId),
    #[error("room graph is not connected: room {0} is unreachable from room {1}")]
    Disconnected(RoomId, RoomId),
    #[error("at least one room is required")]
    NoRooms,
    #[error("at least one agent is required")]
    NoAgents,
    #[error("{context} uses color {color} but n_colors is {n_colors}")]
    ColorOutOfRange {
        context: String,
        color: u8,
        n_colors: usize,
    },
    #[error("agent {0} has an empty tool set")]
    EmptyToolSet(String),
    #[error("agent {0} lists a tool twice")]
    DuplicateTool(String),
    #[error("bomb {0} is listed twice")]
    DuplicateBomb(BombId),
    #[error("bomb {0} has an empty phase sequence")]
    EmptySequence(BombId),
    #[error("call sign {0} is used twice")]
    DuplicateAgent(String),
    #[error("round_limit must be at least 1")]
    ZeroRoundLimit,
    #[error("{0} colors need an explicit color_names table")]
    MissingColorNames(usize),
    #[error("color_names has {names} entries but n_colors is {n_colors}")]
    ColorNamesMismatch { names: usize, n_colors: usize },
    #[error("color name {0:?} must be a single unique word of letters, digits or underscores")]
    BadColorName(String),
}

/// A validated configuration plus derived lookup tables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct World {
    config: WorldConfig,
    adjacency: BTreeMap<RoomId, Vec<RoomId>>,
    palette: Palette,
}

impl World {
    pub fn new(config: WorldConfig) -> Result<Self, ConfigError> {
        config.validate()?;
        let mut adjacency: BTreeMap<RoomId, BTreeSet<RoomId>> =
            config.rooms.iter().map(|r| (*r, BTreeSet::new())).collect();
        for (a, b) in &config.edges {
            adjacency.entry(*a).or_default().insert(*b);
            adjacency.entry(*b).or_default().insert(*a);
        }
        let palette = match &config.color_names {
            Some(names) => Palette::new(names.clone()),
            None => Palette::standard(config.n_colors),
        };
        Ok(Self {
            adjacency: adjacency
                .into_iter()
                .map(|(r, set)| (r, set.into_iter().collect()))
                .collect(),
            config,
            palette,
        })
    }

    pub fn config(&self) -> &WorldConfig {
        &self.config
    }

    pub fn palette(&self) -> &Palette {
        &self.palette
    }

    /// Rooms in ascending id order.
    pub fn rooms(&self) -> impl Iterator<Item = RoomId> + '_ {
        self.adjacency.keys().copied()
    }

    pub fn neighbors(&self, room: RoomId) -> &[RoomId] {
        self.adjacency.get(&room).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn is_adjacent(&self, a: RoomId, b: RoomId) -> bool {
        self.neighbors(a).binary_search(&b).is_ok()
    }

    pub fn has_room(&self, room: RoomId) -> bool {
        self.adjacency.contains_key(&room)
    }

    pub fn agent_count(&self) -> usize {
        self.config.agents.len()
    }

    /// Sum of 10 points per phase over every bomb.
    pub fn max_score(&self) -> u32 {
        self.config
            .bombs
            .iter()
            .map(|b| 10 * b.sequence.len() as u32)
            .sum()
    }

    /// BFS hop distances from `from` to every room.
    pub fn distances(&self, from: RoomId) -> BTreeMap<RoomId, u32> {
        let mut dist = BTreeMap::new();
        dist.insert(from, 0);
        let mut queue = VecDeque::from([from]);
        while let Some(room) = queue.pop_front() {
            let d = dist[&room];
            for next in self.neighbors(room) {
                if !dist.contains_key(next) {
                    dist.insert(*next, d + 1);
                    queue.push_back(*next);
                }
            }
        }
        dist
    }

    pub fn distance(&self, from: RoomId, to: RoomId) -> Option<u32> {
        self.distances(from).get(&to).copied()
    }

    /// Shortest path excluding `from`, including `to`. Ties prefer lower room ids.
    pub fn shortest_path(&self, from: RoomId, to: RoomId) -> Option<Vec<RoomId>> {
        if from == to {
            return Some(Vec::new());
        }
        let dist_to_target = self.distances(to);
        let mut path = Vec::new();
        let mut current = from;
        let mut remaining = *dist_to_target.get(&from)?;
        while remaining > 0 {
            let next = self
                .neighbors(current)
                .iter()
                .copied()
                .find(|n| dist_to_target.get(n) == Some(&(remaining - 1)))?;
            path.push(next);
            current = next;
            remaining -= 1;
        }
        Some(path)
    }
}

impl WorldConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.rooms.is_empty() {
            return Err(ConfigError::NoRooms);
        }
        if self.n_rooms != self.rooms.len() {
            return Err(ConfigError::RoomCountMismatch {
                declared: self.n_rooms,
                listed: self.rooms.len(),
            });
        }
        let mut rooms = BTreeSet::new();
        for room in &self.rooms {
            if !rooms.insert(*room) {
                return Err(ConfigError::DuplicateRoom(*room));
            }
        }
        let known = |room: RoomId, context: String| {
            if rooms.contains(&room) {
                Ok(())
            } else {
                Err(ConfigError::UnknownRoom { context, room })
            }
        };
        for (a, b) in &self.edges {
            known(*a, format!("edge {a}-{b}"))?;
            known(*b, format!("edge {a}-{b}"))?;
            if a == b {
                return Err(ConfigError::SelfLoop(*a));
            }
        }
        if self.round_limit == 0 {
            return Err(ConfigError::ZeroRoundLimit);
        }
        match &self.color_names {
            Some(names) if names.len() != self.n_colors => {
                return Err(ConfigError::ColorNamesMismatch {
                    names: names.len(),
                    n_colors: self.n_colors,
                })
            }
            None if self.n_colors > super::ids::DEFAULT_COLOR_NAMES.len() => {
                return Err(ConfigError::MissingColorNames(self.n_colors))
            }
            Some(names) => {
                let mut seen = BTreeSet::new();
                for name in names {
                    let lower = name.to_lowercase();
                    let word = lower.starts_with(|c: char| c.is_ascii_alphabetic())
                        && lower.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
                    if !word || !seen.insert(lower) {
                        return Err(ConfigError::BadColorName(name.clone()));
                    }
                }
            }
            _ => {}
        }
        let check_color = |color: Color, context: String| {
            if (color.0 as usize) < self.n_colors {
                Ok(())
            } else {
                Err(ConfigError::ColorOutOfRange {
                    context,
                    color: color.0,
                    n_colors: self.n_colors,
                })
            }
        };

        let mut bomb_ids = BTreeSet::new();
        for bomb in &self.bombs {
            if !bomb_ids.insert(bomb.id) {
                return Err(ConfigError::DuplicateBomb(bomb.id));
            }
            known(bomb.location, format!("bomb {}", bomb.id))?;
            if bomb.sequence.is_empty() {
                return Err(ConfigError::EmptySequence(bomb.id));
            }
            for color in &bomb.sequence {
                check_color(*color, format!("bomb {}", bomb.id))?;
            }
        }

        if self.agents.is_empty() {
            return Err(ConfigError::NoAgents);
        }
        let mut call_signs = BTreeSet::new();
        for agent in &self.agents {
            if !call_signs.insert(agent.call_sign.to_lowercase()) {
                return Err(ConfigError::DuplicateAgent(agent.call_sign.clone()));
            }
            known(agent.start, format!("agent {}", agent.call_sign))?;
            if agent.tools.is_empty() {
                return Err(ConfigError::EmptyToolSet(agent.call_sign.clone()));
            }
            let mut seen = BTreeSet::new();
            for tool in &agent.tools {
                check_color(*tool, format!("agent {}", agent.call_sign))?;
                if !seen.insert(*tool) {
                    return Err(ConfigError::DuplicateTool(agent.call_sign.clone()));
                }
            }
        }

        // connectivity
        let mut adjacency: BTreeMap<RoomId, Vec<RoomId>> = BTreeMap::new();
        for (a, b) in &self.edges {
            adjacency.entry(*a).or_default().push(*b);
            adjacency.entry(*b).or_default().push(*a);
        }
        let origin = self.rooms[0];
        let mut seen = BTreeSet::from([origin]);
        let mut stack = vec![origin];
        while let Some(room) = stack.pop() {
            for next in adjacency.get(&room).into_iter().flatten() {
                if seen.insert(*next) {
                    stack.push(*next);
                }
            }
        }
        if let Some(missing) = self.rooms.iter().find(|r| !seen.contains(r)) {
            return Err(ConfigError::Disconnected(*missing, origin));
        }
        Ok(())
    }

    /// The fixed five-room map: rooms 0, 3, 5, 6, 8 with room 0
    /// adjacent to all others plus 5-6, 3-8 and 8-6. Bombs of sizes {1,1,2,2,3}; all three
    /// agents start in room 0 holding red+green, green+blue and blue+red.
    pub fn standard_map() -> Self {
        let r = RoomId;
        let c = Color;
        let bomb = |id: u32, room: u32, seq: &[u8]| BombSpec {
            id: BombId(id),
            location: r(room),
            sequence: seq.iter().map(|x| c(*x)).collect(),
        };
        let agent = |name: &str, tools: [u8; 2]| AgentSpec {
            call_sign: name.to_string(),
            start: r(0),
            tools: tools.iter().map(|x| c(*x)).collect(),
        };
        WorldConfig {
            n_rooms: 5,
            n_colors: 3,
            rooms: vec![r(0), r(3), r(5), r(6), r(8)],
            edges: vec![
                (r(0), r(3)),
                (r(0), r(5)),
                (r(0), r(6)),
                (r(0), r(8)),
                (r(5), r(6)),
                (r(3), r(8)),
                (r(8), r(6)),
            ],
            bombs: vec![
                bomb(1, 0, &[0]),
                bomb(2, 3, &[2]),
                bomb(3, 5, &[1, 2]),
                bomb(4, 6, &[2, 0]),
                bomb(5, 8, &[0, 1, 2]),
            ],
            agents: vec![
                agent("Alpha", [0, 1]),
                agent("Bravo", [1, 2]),
                agent("Charlie", [2, 0]),
            ],
            round_limit: DEFAULT_ROUND_LIMIT,
            deadlock_window: DEFAULT_DEADLOCK_WINDOW,
            apply_mode: ApplyMode::Guarded,
            seed: 0,
            color_names: None,
        }
    }
}
