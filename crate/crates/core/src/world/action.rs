use serde::{Deserialize, Serialize};

use super::config::World;
use super::ids::{AgentId, BombId, Color, RoomId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InvalidReason {
    /// No action phrase was found in the reply.
    NoAction,
    /// Two or more distinct action phrases were found.
    Ambiguous,
    /// The reply could not be obtained or decoded (timeout, broken frame, dead process).
    Unparseable,
}

/// One agent's choice for a turn.
///
/// `Move`, `Inspect` and `Apply` form the n+m+1 text-game action space. `Wait` is an idle
/// step used only by centrally planned teams; the reply parser never produces it.
/// `Invalid` records a reply that could not be turned into an action.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Action {
    Move { room: RoomId },
    Inspect,
    Apply { color: Color },
    Wait,
    Invalid { reason: InvalidReason },
}

impl Action {
    /// The full n+m+1 action space of a configuration.
    pub fn space(world: &World) -> Vec<Action> {
        let mut out: Vec<Action> = world.rooms().map(|room| Action::Move { room }).collect();
        out.push(Action::Inspect);
        out.extend(
            world
                .palette()
                .colors()
                .map(|color| Action::Apply { color }),
        );
        out
    }

    pub fn is_invalid(&self) -> bool {
        matches!(self, Action::Invalid { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RuleError {
    NotAdjacent {
        target: RoomId,
        current: RoomId,
    },
    NoBombToInspect {
        room: RoomId,
    },
    NoBombToDefuse {
        room: RoomId,
    },
    WrongSequence {
        bomb: BombId,
        color: Color,
        remaining: Vec<Color>,
    },
    MissingTool {
        color: Color,
    },
    Unparseable {
        reason: InvalidReason,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Ok,
    RuleError(RuleError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "effect", rename_all = "snake_case")]
pub enum Effect {
    MovedTo {
        room: RoomId,
    },
    /// Remaining sequence shown privately to the inspecting agent.
    SequenceRevealed {
        bomb: BombId,
        sequence: Vec<Color>,
    },
    PhaseCut {
        bomb: BombId,
        color: Color,
    },
    BombDefused {
        bomb: BombId,
        points: u32,
    },
    BombExploded {
        bomb: BombId,
    },
}

/// The engine's verdict on a single turn.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionOutcome {
    pub agent: AgentId,
    pub round: u32,
    pub action: Action,
    pub verdict: Verdict,
    pub effects: Vec<Effect>,
    pub score_delta: u32,
}

impl ActionOutcome {
    pub fn is_ok(&self) -> bool {
        matches!(self.verdict, Verdict::Ok)
    }

    pub fn rule_error(&self) -> Option<&RuleError> {
        match &self.verdict {
            Verdict::RuleError(e) => Some(e),
            Verdict::Ok => None,
        }
    }
}
