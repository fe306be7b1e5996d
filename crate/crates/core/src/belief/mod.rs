//! Explicit belief documents: the initial document, a tolerant parser, a deterministic
//! reference updater and a scorer against ground truth.

mod doc;
mod score;
mod update;

pub use doc::{
    cap_summary, initial_belief, observation_line, parse_belief, BeliefDoc, BombIntel, BombStatus,
    ParsedBelief, SequenceIntel, DEFAULT_OBSERVATION_CAP,
};
pub use score::{score_belief, BeliefScore, CategoryScore};
pub use update::reference_update;
