//! Deterministic game engine: rooms, bombs, cutters and the turn rules.
//!
//! States are values. Every operation returns a new state (or mutates one the caller
//! owns), so independent trials never share anything mutable.

mod action;
mod config;
mod ids;
mod message;
mod state;

pub use action::{Action, ActionOutcome, Effect, InvalidReason, RuleError, Verdict};
pub use config::{
    AgentSpec, ApplyMode, BombSpec, ConfigError, World, WorldConfig, DEFAULT_DEADLOCK_WINDOW,
    DEFAULT_ROUND_LIMIT,
};
pub use ids::{AgentId, BombId, Color, Palette, RoomId, DEFAULT_COLOR_NAMES};
pub use message::{Claim, Message};
pub use state::{
    new_world, AgentState, Bomb, BombState, RoundResult, Termination, Turn, WorldError, WorldState,
};
