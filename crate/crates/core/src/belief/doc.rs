use std::collections::BTreeMap;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::textio::{join_list, render_observation, TemplateSet};
use crate::world::{AgentId, BombId, Color, Palette, RoomId, WorldState};

pub const DEFAULT_OBSERVATION_CAP: usize = 400;

const PREAMBLE: &str = "Below is your current belief about game state based on your previous \
observations about the environment and interactions with your teammates.";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "colors", rename_all = "snake_case")]
pub enum SequenceIntel {
    Unknown,
    /// Remaining sequence.
    Known(Vec<Color>),
    /// Colors this agent saw cut without ever seeing the rest.
    Partial(Vec<Color>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BombStatus {
    Active,
    Defused,
    Exploded,
    /// Gone from its room for reasons this agent has not seen.
    Cleared,
}

impl BombStatus {
    pub fn is_terminal(self) -> bool {
        matches!(self, BombStatus::Defused | BombStatus::Exploded)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BombIntel {
    Unknown,
    Known {
        location: Option<RoomId>,
        sequence: SequenceIntel,
        status: BombStatus,
        /// Round of the newest information; `None` for the untouched initial entry.
        as_of: Option<u32>,
    },
}

/// Bomb intel as a list of `[id, intel]` pairs, which survives flattened JSON containers.
mod bomb_entries {
    use std::collections::BTreeMap;

    use serde::{Deserialize, Deserializer, Serializer};

    use super::BombIntel;
    use crate::world::BombId;

    pub fn serialize<S: Serializer>(
        map: &BTreeMap<BombId, BombIntel>,
        s: S,
    ) -> Result<S::Ok, S::Error> {
        s.collect_seq(map.iter())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> Result<BTreeMap<BombId, BombIntel>, D::Error> {
        Vec::<(BombId, BombIntel)>::deserialize(d).map(|v| v.into_iter().collect())
    }
}

/// An agent's belief document, section for section.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BeliefDoc {
    pub role: String,
    pub round: u32,
    pub score: u32,
    /// One line, capped.
    pub observation: String,
    /// Lowercase call sign and room for every agent.
    pub teammate_locations: Vec<(String, RoomId)>,
    pub connectivity: Vec<(RoomId, Vec<RoomId>)>,
    #[serde(with = "bomb_entries")]
    pub bombs: BTreeMap<BombId, BombIntel>,
    /// Call sign and sorted tools for every agent.
    pub tools: Vec<(String, Vec<Color>)>,
    pub actions: Vec<String>,
}

/// Collapses whitespace to one line and caps it at `cap` characters.
pub fn cap_summary(text: &str, cap: usize) -> String {
    let line = text.split_whitespace().collect::<Vec<_>>().join(" ");
    if line.chars().count() <= cap {
        return line;
    }
    let cut: String = line.chars().take(cap.saturating_sub(3)).collect();
    format!("{}...", cut.trim_end())
}

/// The "Observation:" sentence of a rendered observation.
pub fn observation_line(text: &str) -> String {
    text.lines()
        .find_map(|l| l.strip_prefix("Observation: "))
        .unwrap_or_default()
        .to_string()
}

pub fn initial_belief(state: &WorldState, agent: AgentId) -> Option<BeliefDoc> {
    let obs = render_observation(state, agent, None, &[])?;
    let world = state.world();
    let mut bombs: BTreeMap<BombId, BombIntel> = world
        .config()
        .bombs
        .iter()
        .map(|b| (b.id, BombIntel::Unknown))
        .collect();
    for (id, seq) in &obs.room_bombs {
        bombs.insert(
            *id,
            BombIntel::Known {
                location: Some(obs.room),
                sequence: seq
                    .clone()
                    .map_or(SequenceIntel::Unknown, SequenceIntel::Known),
                status: BombStatus::Active,
                as_of: None,
            },
        );
    }
    Some(BeliefDoc {
        role: obs.call_sign.clone(),
        round: obs.round,
        score: obs.score,
        observation: cap_summary(&observation_line(&obs.text), DEFAULT_OBSERVATION_CAP),
        teammate_locations: obs
            .teammate_locations
            .iter()
            .map(|(n, r)| (n.to_lowercase(), *r))
            .collect(),
        connectivity: world
            .rooms()
            .map(|r| (r, world.neighbors(r).to_vec()))
            .collect(),
        bombs,
        tools: world
            .config()
            .agents
            .iter()
            .map(|a| {
                let mut t = a.tools.clone();
                t.sort();
                (a.call_sign.clone(), t)
            })
            .collect(),
        actions: TemplateSet::builtin()
            .get("action_menu")
            .lines()
            .map(str::to_string)
            .collect(),
    })
}

fn render_sequence(palette: &Palette, colors: &[Color]) -> String {
    colors
        .iter()
        .map(|c| palette.name(*c))
        .collect::<Vec<_>>()
        .join(", ")
}

fn render_bomb(palette: &Palette, id: BombId, intel: &BombIntel) -> String {
    let BombIntel::Known {
        location,
        sequence,
        status,
        as_of,
    } = intel
    else {
        return format!("Bomb {id}: Details currently unknown.");
    };
    let mut line = format!("Bomb {id}: ");
    match location {
        Some(r) => line.push_str(&format!("Located in Room {r}.")),
        None => line.push_str("Location unknown."),
    }
    match status {
        BombStatus::Active => match sequence {
            SequenceIntel::Unknown => line.push_str(" The phase sequence is Unknown."),
            SequenceIntel::Known(seq) if seq.is_empty() => {
                line.push_str(" The phase sequence is empty.")
            }
            SequenceIntel::Known(seq) => line.push_str(&format!(
                " The phase sequence is {}.",
                render_sequence(palette, seq)
            )),
            SequenceIntel::Partial(cut) => line.push_str(&format!(
                " The phase sequence is Unknown after cutting {}.",
                render_sequence(palette, cut)
            )),
        },
        BombStatus::Defused => line.push_str(" Defused."),
        BombStatus::Exploded => line.push_str(" Exploded."),
        BombStatus::Cleared => line.push_str(" No longer in the room."),
    }
    if let Some(r) = as_of {
        line.push_str(&format!(" (updated round {r})"));
    }
    line
}

fn render_neighbors(neighbors: &[RoomId]) -> String {
    let names: Vec<String> = neighbors.iter().map(|r| r.to_string()).collect();
    match names.len() {
        0 => "no room".to_string(),
        2 => format!("room {} and {}", names[0], names[1]),
        _ => format!("room {}", names.join(", ")),
    }
}

impl BeliefDoc {
    /// The natural-language form used in prompts.
    pub fn render(&self, palette: &Palette) -> String {
        let mut out = String::new();
        out.push_str(PREAMBLE);
        out.push('\n');
        out.push_str(&format!(
            "Your role: You are playing as Player {}.\n",
            self.role
        ));
        out.push_str(&format!("Current round: {}\n", self.round));
        out.push_str(&format!("Total team score: {}.\n", self.score));
        out.push_str(&format!("Observation: {}\n", self.observation));
        let locations: Vec<String> = self
            .teammate_locations
            .iter()
            .map(|(n, r)| format!("Player {n} is in Room {r}"))
            .collect();
        out.push_str(&format!("Teammate Locations: {}.\n", locations.join("; ")));
        out.push_str("Room connectivity:\n");
        for (room, neighbors) in &self.connectivity {
            out.push_str(&format!(
                "- Room {room} is connected to {}\n",
                render_neighbors(neighbors)
            ));
        }
        out.push_str("Bomb Intel:\n");
        if self.bombs.is_empty() {
            out.push_str("- none\n");
        }
        for (id, intel) in &self.bombs {
            out.push_str(&format!("- {}\n", render_bomb(palette, *id, intel)));
        }
        out.push_str("Tool inventory:\n");
        for (name, tools) in &self.tools {
            let names: Vec<String> = tools.iter().map(|c| palette.name(*c)).collect();
            let noun = if tools.len() == 1 {
                "cutter"
            } else {
                "cutters"
            };
            out.push_str(&format!(
                "- {name}: Equipped with {} wire {noun}.\n",
                join_list(&names, "and")
            ));
        }
        out.push_str("Available action options:\n");
        for action in &self.actions {
            out.push_str(&format!("- {action}\n"));
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).unwrap_or_default()
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Section {
    Role,
    Round,
    Score,
    Observation,
    Locations,
    Connectivity,
    Bombs,
    Tools,
    Actions,
}

const HEADERS: [(&str, Section); 9] = [
    ("your role", Section::Role),
    ("current round", Section::Round),
    ("total team score", Section::Score),
    ("observation", Section::Observation),
    ("teammate locations", Section::Locations),
    ("room connectivity", Section::Connectivity),
    ("bomb intel", Section::Bombs),
    ("tool inventory", Section::Tools),
    ("available action options", Section::Actions),
];

static ROLE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)playing\s+as\s+player\s+([^\s.]+)").unwrap());
static NUMBER: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\d+").unwrap());
static LOCATION: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)player\s+(\S+)\s+is\s+in\s+room\s+(\d+)").unwrap());
static CONNECTED: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)^room\s+(\d+)\s+is\s+connected\s+to\s+(.*)$").unwrap());
static BOMB: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)^bomb\s+(\d+)\s*:\s*(.*)$").unwrap());
static LOCATED: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)located\s+in\s+room\s+(\d+)").unwrap());
static SEQUENCE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)the\s+phase\s+sequence\s+is\s+(unknown\s+after\s+cutting\s+[^.]*|[^.]*)\.")
        .unwrap()
});
static UPDATED: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)\(updated\s+round\s+(\d+)\)").unwrap());
static TOOLS: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)^([^:\s]+)\s*:\s*equipped\s+with\s+(.*?)\s+wire\s+cutters?\.?$").unwrap()
});

/// A parsed document plus the lines that could not be understood.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedBelief {
    pub doc: BeliefDoc,
    pub malformed: Vec<String>,
}

fn strip_item(line: &str) -> &str {
    let mut l = line.trim();
    for prefix in ["\\item", "- ", "* ", "\u{2022}"] {
        if let Some(rest) = l.strip_prefix(prefix) {
            l = rest.trim_start();
        }
    }
    l.trim_matches('*').trim()
}

fn header(line: &str) -> Option<(Section, &str)> {
    let plain = line.trim_start_matches(['*', '#', ' ']);
    let (head, rest) = plain.split_once(':')?;
    let head = head.trim_matches(['*', ' ']).to_lowercase();
    HEADERS
        .iter()
        .find(|(name, _)| *name == head)
        .map(|(_, s)| (*s, rest.trim_start_matches('*').trim()))
}

fn parse_colors(text: &str, palette: &Palette) -> Option<Vec<Color>> {
    let cleaned = text.replace(" and ", ",");
    let mut out = Vec::new();
    for word in cleaned.split(',').map(str::trim).filter(|w| !w.is_empty()) {
        out.push(palette.parse(word)?);
    }
    Some(out)
}

fn parse_bomb(rest: &str, palette: &Palette) -> Option<BombIntel> {
    if rest.to_lowercase().starts_with("details currently unknown") {
        return Some(BombIntel::Unknown);
    }
    let location = match LOCATED.captures(rest) {
        Some(c) => Some(RoomId(c[1].parse().ok()?)),
        None if rest.to_lowercase().contains("location unknown") => None,
        None => return None,
    };
    let lower = rest.to_lowercase();
    let status = if lower.contains("defused.") {
        BombStatus::Defused
    } else if lower.contains("exploded.") {
        BombStatus::Exploded
    } else if lower.contains("no longer in the room") {
        BombStatus::Cleared
    } else {
        BombStatus::Active
    };
    let sequence = match SEQUENCE.captures(rest) {
        None if status == BombStatus::Active => return None,
        None => SequenceIntel::Unknown,
        Some(c) => {
            let body = c[1].trim();
            let lower = body.to_lowercase();
            if lower == "unknown" {
                SequenceIntel::Unknown
            } else if lower == "empty" {
                SequenceIntel::Known(Vec::new())
            } else if let Some(idx) = lower.find("after cutting") {
                SequenceIntel::Partial(parse_colors(&body[idx + "after cutting".len()..], palette)?)
            } else {
                SequenceIntel::Known(parse_colors(body, palette)?)
            }
        }
    };
    let as_of = match UPDATED.captures(rest) {
        Some(c) => Some(c[1].parse().ok()?),
        None => None,
    };
    Some(BombIntel::Known {
        location,
        sequence,
        status,
        as_of,
    })
}

/// Section-wise tolerant parse. Unreadable lines are reported, readable ones are kept.
pub fn parse_belief(text: &str, palette: &Palette) -> ParsedBelief {
    let mut doc = BeliefDoc {
        role: String::new(),
        round: 0,
        score: 0,
        observation: String::new(),
        teammate_locations: Vec::new(),
        connectivity: Vec::new(),
        bombs: BTreeMap::new(),
        tools: Vec::new(),
        actions: Vec::new(),
    };
    let mut malformed = Vec::new();
    let mut section: Option<Section> = None;
    for raw in text.lines() {
        if raw.trim().is_empty() || raw.trim() == PREAMBLE {
            continue;
        }
        if let Some((s, rest)) = header(raw) {
            section = Some(s);
            let ok = match s {
                Section::Role => ROLE
                    .captures(rest)
                    .map(|c| doc.role = c[1].to_string())
                    .is_some(),
                Section::Round => NUMBER
                    .find(rest)
                    .and_then(|m| m.as_str().parse().ok())
                    .map(|n| doc.round = n)
                    .is_some(),
                Section::Score => NUMBER
                    .find(rest)
                    .and_then(|m| m.as_str().parse().ok())
                    .map(|n| doc.score = n)
                    .is_some(),
                Section::Observation => {
                    doc.observation = rest.to_string();
                    true
                }
                Section::Locations => {
                    for c in LOCATION.captures_iter(rest) {
                        match c[2].parse() {
                            Ok(r) => doc
                                .teammate_locations
                                .push((c[1].to_lowercase(), RoomId(r))),
                            Err(_) => malformed.push(raw.to_string()),
                        }
                    }
                    true
                }
                _ => rest.is_empty(),
            };
            if !ok {
                malformed.push(raw.to_string());
            }
            continue;
        }
        let line = strip_item(raw);
        let ok = match section {
            Some(Section::Connectivity) => CONNECTED
                .captures(line)
                .and_then(|c| {
                    let room = RoomId(c[1].parse().ok()?);
                    let mut n = Vec::new();
                    for m in NUMBER.find_iter(&c[2]) {
                        n.push(RoomId(m.as_str().parse().ok()?));
                    }
                    doc.connectivity.push((room, n));
                    Some(())
                })
                .is_some(),
            Some(Section::Bombs) if line.eq_ignore_ascii_case("none") => true,
            Some(Section::Bombs) => BOMB
                .captures(line)
                .and_then(|c| {
                    let id = BombId(c[1].parse().ok()?);
                    let intel = parse_bomb(&c[2], palette)?;
                    doc.bombs.insert(id, intel);
                    Some(())
                })
                .is_some(),
            Some(Section::Tools) => TOOLS
                .captures(line)
                .and_then(|c| {
                    let mut colors = parse_colors(&c[2], palette)?;
                    colors.sort();
                    doc.tools.push((c[1].to_string(), colors));
                    Some(())
                })
                .is_some(),
            Some(Section::Actions) => {
                doc.actions.push(line.to_string());
                true
            }
            Some(Section::Observation) => {
                if !doc.observation.is_empty() {
                    doc.observation.push(' ');
                }
                doc.observation.push_str(line);
                true
            }
            _ => false,
        };
        if !ok {
            malformed.push(raw.to_string());
        }
    }
    ParsedBelief { doc, malformed }
}
