use serde::{Deserialize, Serialize};

use super::doc::{BeliefDoc, BombIntel, BombStatus, SequenceIntel};
use crate::world::{BombId, BombState, WorldState};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryScore {
    pub consistent: usize,
    pub inconsistent: usize,
    pub unknown: usize,
}

impl CategoryScore {
    /// Fraction of known entries that are true; `None` when nothing is known.
    pub fn accuracy(&self) -> Option<f64> {
        let known = self.consistent + self.inconsistent;
        (known > 0).then(|| self.consistent as f64 / known as f64)
    }

    fn add(&mut self, ok: Option<bool>) {
        match ok {
            Some(true) => self.consistent += 1,
            Some(false) => self.inconsistent += 1,
            None => self.unknown += 1,
        }
    }

    pub fn merge(&mut self, other: &CategoryScore) {
        self.consistent += other.consistent;
        self.inconsistent += other.inconsistent;
        self.unknown += other.unknown;
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BeliefScore {
    pub locations: CategoryScore,
    /// Sequences and bomb status.
    pub sequences: CategoryScore,
    pub connectivity: CategoryScore,
    /// Bomb ids in the document that do not exist.
    pub hallucinated: Vec<BombId>,
    pub malformed: usize,
}

impl BeliefScore {
    pub fn overall(&self) -> CategoryScore {
        let mut all = self.locations;
        all.merge(&self.sequences);
        all.merge(&self.connectivity);
        all
    }

    pub fn merge(&mut self, other: &BeliefScore) {
        self.locations.merge(&other.locations);
        self.sequences.merge(&other.sequences);
        self.connectivity.merge(&other.connectivity);
        self.hallucinated.extend(other.hallucinated.iter().copied());
        self.malformed += other.malformed;
    }
}

/// Compares every known entry of `doc` with the true state.
pub fn score_belief(doc: &BeliefDoc, truth: &WorldState) -> BeliefScore {
    let mut score = BeliefScore::default();
    for (id, intel) in &doc.bombs {
        let Some(bomb) = truth.bomb(*id) else {
            score.hallucinated.push(*id);
            continue;
        };
        let BombIntel::Known {
            location,
            sequence,
            status,
            ..
        } = intel
        else {
            score.locations.add(None);
            score.sequences.add(None);
            continue;
        };
        score.locations.add(location.map(|r| r == bomb.location));
        let state = bomb.state();
        let ok = match status {
            BombStatus::Defused => Some(state == BombState::Defused),
            BombStatus::Exploded => Some(state == BombState::Exploded),
            BombStatus::Cleared => Some(!bomb.is_live()),
            BombStatus::Active => match sequence {
                SequenceIntel::Unknown => None,
                SequenceIntel::Known(seq) => Some(bomb.is_live() && seq == bomb.remaining()),
                SequenceIntel::Partial(cut) => {
                    let done = &bomb.full_sequence()[..bomb.phases_cut()];
                    let mut it = done.iter();
                    Some(bomb.is_live() && cut.iter().all(|c| it.any(|d| d == c)))
                }
            },
        };
        score.sequences.add(ok);
    }
    let world = truth.world();
    for (room, neighbors) in &doc.connectivity {
        let mut listed = neighbors.clone();
        listed.sort();
        listed.dedup();
        score.connectivity.add(Some(
            world.has_room(*room) && listed == world.neighbors(*room),
        ));
    }
    score
}
