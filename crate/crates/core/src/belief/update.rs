use super::doc::{cap_summary, observation_line, BeliefDoc, BombIntel, BombStatus, SequenceIntel};
use crate::textio::Observation;
use crate::world::{ActionOutcome, BombId, Claim, Color, Effect, Message, RoomId};

/// Deterministic belief maintenance.
///
/// The agent's own last outcome is applied first, then what it sees now, then teammates'
/// claims. Claims only win when they are newer than the entry they would replace.
pub fn reference_update(
    belief: &BeliefDoc,
    observation: &Observation,
    outcome: Option<&ActionOutcome>,
    messages: &[Message],
    cap: usize,
) -> BeliefDoc {
    let mut doc = belief.clone();
    let round = observation.round;
    doc.round = round;
    doc.score = observation.score;
    doc.observation = cap_summary(&observation_line(&observation.text), cap);
    doc.teammate_locations = observation
        .teammate_locations
        .iter()
        .map(|(n, r)| (n.to_lowercase(), *r))
        .collect();

    if let Some(outcome) = outcome.filter(|o| o.agent == observation.agent && o.is_ok()) {
        apply_outcome(&mut doc, outcome, observation.room);
    }
    apply_room(&mut doc, observation, round);
    for m in messages.iter().filter(|m| m.sender != observation.agent) {
        for claim in m.claims.iter().flatten() {
            apply_claim(&mut doc, claim, m.sent_round);
        }
    }
    doc
}

fn entry(doc: &mut BeliefDoc, bomb: BombId) -> &mut BombIntel {
    doc.bombs.entry(bomb).or_insert(BombIntel::Unknown)
}

fn set(intel: &mut BombIntel, next: BombIntel) {
    if *intel != next {
        *intel = next;
    }
}

fn apply_outcome(doc: &mut BeliefDoc, outcome: &ActionOutcome, room: RoomId) {
    let round = outcome.round;
    for effect in &outcome.effects {
        match effect {
            Effect::MovedTo { .. } => {}
            Effect::SequenceRevealed { bomb, sequence } => {
                let e = entry(doc, *bomb);
                if !is_terminal(e) {
                    set(
                        e,
                        BombIntel::Known {
                            location: Some(room),
                            sequence: SequenceIntel::Known(sequence.clone()),
                            status: BombStatus::Active,
                            as_of: Some(round),
                        },
                    );
                }
            }
            Effect::PhaseCut { bomb, color } => {
                let e = entry(doc, *bomb);
                let sequence = match e {
                    BombIntel::Known {
                        sequence: SequenceIntel::Known(seq),
                        ..
                    } if seq.first() == Some(color) => SequenceIntel::Known(seq[1..].to_vec()),
                    BombIntel::Known {
                        sequence: SequenceIntel::Partial(cut),
                        ..
                    } => {
                        let mut cut = cut.clone();
                        cut.push(*color);
                        SequenceIntel::Partial(cut)
                    }
                    _ => SequenceIntel::Partial(vec![*color]),
                };
                set(
                    e,
                    BombIntel::Known {
                        location: Some(room),
                        sequence,
                        status: BombStatus::Active,
                        as_of: Some(round),
                    },
                );
            }
            Effect::BombDefused { bomb, .. } => {
                terminal(entry(doc, *bomb), Some(room), BombStatus::Defused, round)
            }
            Effect::BombExploded { bomb } => {
                terminal(entry(doc, *bomb), Some(room), BombStatus::Exploded, round)
            }
        }
    }
}

fn is_terminal(intel: &BombIntel) -> bool {
    matches!(intel, BombIntel::Known { status, .. } if status.is_terminal())
}

fn location_of(intel: &BombIntel) -> Option<RoomId> {
    match intel {
        BombIntel::Known { location, .. } => *location,
        BombIntel::Unknown => None,
    }
}

fn as_of(intel: &BombIntel) -> Option<u32> {
    match intel {
        BombIntel::Known { as_of, .. } => *as_of,
        BombIntel::Unknown => None,
    }
}

fn terminal(intel: &mut BombIntel, fallback: Option<RoomId>, status: BombStatus, round: u32) {
    if is_terminal(intel) {
        return;
    }
    let location = location_of(intel).or(fallback);
    set(
        intel,
        BombIntel::Known {
            location,
            sequence: SequenceIntel::Unknown,
            status,
            as_of: Some(round),
        },
    );
}

fn apply_room(doc: &mut BeliefDoc, obs: &Observation, round: u32) {
    for (bomb, seen) in &obs.room_bombs {
        let e = entry(doc, *bomb);
        if is_terminal(e) {
            continue;
        }
        let sequence = match (e.clone(), seen) {
            (
                BombIntel::Known {
                    sequence: known @ (SequenceIntel::Known(_) | SequenceIntel::Partial(_)),
                    status: BombStatus::Active,
                    ..
                },
                _,
            ) => known,
            (_, Some(seq)) => SequenceIntel::Known(seq.clone()),
            (_, None) => SequenceIntel::Unknown,
        };
        let next_location = Some(obs.room);
        let unchanged = matches!(e, BombIntel::Known { location, sequence: s, status: BombStatus::Active, .. }
            if *location == next_location && *s == sequence);
        if !unchanged {
            set(
                e,
                BombIntel::Known {
                    location: next_location,
                    sequence,
                    status: BombStatus::Active,
                    as_of: Some(round),
                },
            );
        }
    }
    let present: Vec<BombId> = obs.room_bombs.iter().map(|(b, _)| *b).collect();
    for (bomb, intel) in doc.bombs.iter_mut() {
        if present.contains(bomb) {
            continue;
        }
        if let BombIntel::Known {
            location: Some(r),
            status: BombStatus::Active,
            ..
        } = intel
        {
            if *r == obs.room {
                let r = *r;
                *intel = BombIntel::Known {
                    location: Some(r),
                    sequence: SequenceIntel::Unknown,
                    status: BombStatus::Cleared,
                    as_of: Some(round),
                };
            }
        }
    }
}

fn newer(intel: &BombIntel, round: u32) -> bool {
    as_of(intel).is_none_or(|a| round > a)
}

fn apply_claim(doc: &mut BeliefDoc, claim: &Claim, sent_round: u32) {
    match claim {
        Claim::RoomContents { room, bombs } => {
            for bomb in bombs {
                locate(doc, *bomb, *room, sent_round);
            }
            for (bomb, intel) in doc.bombs.iter_mut() {
                if bombs.contains(bomb) || !newer(intel, sent_round) {
                    continue;
                }
                if let BombIntel::Known {
                    location: Some(r),
                    status: BombStatus::Active,
                    ..
                } = intel
                {
                    if *r == *room {
                        let r = *r;
                        *intel = BombIntel::Known {
                            location: Some(r),
                            sequence: SequenceIntel::Unknown,
                            status: BombStatus::Cleared,
                            as_of: Some(sent_round),
                        };
                    }
                }
            }
        }
        Claim::BombLocation { bomb, room } => locate(doc, *bomb, *room, sent_round),
        Claim::BombSequence { bomb, remaining } => {
            sequence_claim(doc, *bomb, remaining, sent_round)
        }
        Claim::BombDefused { bomb, round } => {
            terminal(entry(doc, *bomb), None, BombStatus::Defused, *round)
        }
        Claim::PhaseCut {
            bomb,
            remaining,
            round,
            ..
        } => {
            if remaining.is_empty() {
                terminal(entry(doc, *bomb), None, BombStatus::Defused, *round)
            } else {
                sequence_claim(doc, *bomb, remaining, *round)
            }
        }
        Claim::IntentMove { .. } => {}
    }
}

fn locate(doc: &mut BeliefDoc, bomb: BombId, room: RoomId, round: u32) {
    let e = entry(doc, bomb);
    match e {
        BombIntel::Unknown => {
            *e = BombIntel::Known {
                location: Some(room),
                sequence: SequenceIntel::Unknown,
                status: BombStatus::Active,
                as_of: Some(round),
            }
        }
        BombIntel::Known {
            location,
            as_of,
            status,
            ..
        } => {
            if *location != Some(room) && (location.is_none() || as_of.is_none_or(|a| round > a)) {
                *location = Some(room);
                if !status.is_terminal() {
                    *as_of = Some(round);
                }
            }
        }
    }
}

fn sequence_claim(doc: &mut BeliefDoc, bomb: BombId, remaining: &[Color], round: u32) {
    let e = entry(doc, bomb);
    if is_terminal(e) {
        return;
    }
    let (location, current, current_as_of) = match e {
        BombIntel::Known {
            location,
            sequence,
            as_of,
            ..
        } => (*location, sequence.clone(), *as_of),
        BombIntel::Unknown => (None, SequenceIntel::Unknown, None),
    };
    let wins = match (&current, current_as_of) {
        (SequenceIntel::Known(_) | SequenceIntel::Partial(_), Some(a)) if round < a => false,
        (SequenceIntel::Known(seq), Some(a)) if round == a => remaining.len() < seq.len(),
        _ => true,
    };
    if wins && current != SequenceIntel::Known(remaining.to_vec()) {
        *e = BombIntel::Known {
            location,
            sequence: SequenceIntel::Known(remaining.to_vec()),
            status: BombStatus::Active,
            as_of: Some(round.max(current_as_of.unwrap_or(0))),
        };
    }
}
