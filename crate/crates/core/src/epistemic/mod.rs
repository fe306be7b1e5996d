//! Who knows what, up to second order, derived from observation and message events.
//!
//! Each event names the agents that learn a fact and the audience that can see them learn
//! it. Every chain over the audience ending in a learner becomes an atom. Contents and
//! sequences carry the event their evidence came from so later changes make them stale.

mod log;
mod questions;

pub use log::{
    Chain, Channel, EpistemicError, EpistemicEvent, EpistemicLog, KnowledgeAtom, Proposition,
    StalePolicy, Truth, MAX_CHAIN,
};
pub use questions::{
    generate_questions, grade_answers, parse_yes_no, touched_propositions, GradeError, LevelScore,
    ToMLevel, ToMQuestion, ToMReport,
};
