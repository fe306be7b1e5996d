use std::fmt;

use serde::{Deserialize, Serialize};

/// Opaque room identifier. Room ids need not be contiguous.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RoomId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BombId(pub u32);

/// Wire-cutter / phase color, an index into the palette (`< n_colors`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Color(pub u8);

/// Position of an agent in the configured turn order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AgentId(pub usize);

impl fmt::Display for RoomId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for BombId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

pub const DEFAULT_COLOR_NAMES: [&str; 3] = ["red", "green", "blue"];

/// Color-name table. The first three colors default to red/green/blue;
/// larger palettes must name every color explicitly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Palette {
    names: Vec<String>,
}

impl Palette {
    pub fn new(names: Vec<String>) -> Self {
        Self {
            names: names.into_iter().map(|n| n.to_lowercase()).collect(),
        }
    }

    /// The default palette truncated to `n_colors` (at most three).
    pub fn standard(n_colors: usize) -> Self {
        Self::new(
            DEFAULT_COLOR_NAMES
                .iter()
                .take(n_colors)
                .map(|s| s.to_string())
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn colors(&self) -> impl Iterator<Item = Color> + '_ {
        (0..self.names.len()).map(|i| Color(i as u8))
    }

    /// Lowercase name, or `color<N>` for an index outside the table.
    pub fn name(&self, color: Color) -> String {
        self.names
            .get(color.0 as usize)
            .cloned()
            .unwrap_or_else(|| format!("color{}", color.0))
    }

    /// Name with the first letter upper-cased, as used in `Apply Red Tool`.
    pub fn title(&self, color: Color) -> String {
        let name = self.name(color);
        let mut chars = name.chars();
        match chars.next() {
            Some(first) => first.to_uppercase().chain(chars).collect(),
            None => name,
        }
    }

    pub fn parse(&self, word: &str) -> Option<Color> {
        let word = word.to_lowercase();
        self.names
            .iter()
            .position(|n| *n == word)
            .map(|i| Color(i as u8))
    }

    /// `red, green` style rendering of a phase sequence; `none` when empty.
    pub fn sequence(&self, colors: &[Color]) -> String {
        if colors.is_empty() {
            return "none".to_string();
        }
        colors
            .iter()
            .map(|c| self.name(*c))
            .collect::<Vec<_>>()
            .join(", ")
    }
}
