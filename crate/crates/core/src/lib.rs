//! Deterministic simulator for a cooperative three-agent bomb-defusal text game.

pub mod agents;
pub mod belief;
pub mod epistemic;
pub mod harness;
pub mod planner;
pub mod textio;
pub mod world;
