use serde::{Deserialize, Serialize};

use super::ids::{AgentId, BombId, Color, RoomId};

/// Machine-readable statement attached to a chat message.
///
/// Scripted agents attach claims to everything they broadcast so the epistemic oracle and
/// the reference belief updater can consume messages without language understanding.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "claim", rename_all = "snake_case")]
pub enum Claim {
    /// Live bombs the sender saw in `room` on its latest visit.
    RoomContents {
        room: RoomId,
        bombs: Vec<BombId>,
    },
    BombLocation {
        bomb: BombId,
        room: RoomId,
    },
    /// Remaining sequence as the sender last knew it.
    BombSequence {
        bomb: BombId,
        remaining: Vec<Color>,
    },
    BombDefused {
        bomb: BombId,
        round: u32,
    },
    PhaseCut {
        bomb: BombId,
        color: Color,
        remaining: Vec<Color>,
        round: u32,
    },
    /// Announced plan to move; not a fact.
    IntentMove {
        room: RoomId,
    },
}

impl Claim {
    pub fn round_hint(&self) -> Option<u32> {
        match self {
            Claim::BombDefused { round, .. } | Claim::PhaseCut { round, .. } => Some(*round),
            _ => None,
        }
    }
}

/// A team broadcast. Sent during `sent_round`, visible to everyone in the next round.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub sender: AgentId,
    pub sent_round: u32,
    pub text: String,
    /// `None` marks free text with no structured claims (e.g. from a language-model bridge).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub claims: Option<Vec<Claim>>,
}

impl Message {
    /// Empty text with no claims is not a message at all.
    pub fn is_empty(&self) -> bool {
        self.text.trim().is_empty() && self.claims.as_ref().is_none_or(|c| c.is_empty())
    }
}
