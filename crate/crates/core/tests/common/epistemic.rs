//! Hand-annotated knowledge scenarios and an independent fixpoint oracle.
//!
//! Agents are Alpha (0), Bravo (1) and Charlie (2). Each scenario lists the rules it
//! exercises and the truths a human annotator assigns to selected chains.

use std::collections::{BTreeMap, BTreeSet};

use defuse_core::epistemic::{EpistemicEvent, EpistemicLog, Proposition, StalePolicy, Truth};
use defuse_core::world::{
    Action, ActionOutcome, AgentId, BombId, Claim, Color, Effect, RoomId, RuleError, Verdict,
};

pub const A: AgentId = AgentId(0);
pub const B: AgentId = AgentId(1);
pub const C: AgentId = AgentId(2);

use Truth::{Ambiguous as Amb, No, Yes};

pub fn rc(room: u32) -> Proposition {
    Proposition::RoomContents { room: RoomId(room) }
}

pub fn seq(bomb: u32) -> Proposition {
    Proposition::BombSequence { bomb: BombId(bomb) }
}

pub fn state(bomb: u32, round: u32) -> Proposition {
    Proposition::BombStateChanged {
        bomb: BombId(bomb),
        round,
    }
}

pub fn phase(round: u32) -> Proposition {
    Proposition::PhaseDefused { round }
}

pub fn loc(agent: AgentId) -> Proposition {
    Proposition::Location { agent }
}

fn outcome(
    round: u32,
    agent: AgentId,
    action: Action,
    verdict: Verdict,
    effects: Vec<Effect>,
) -> ActionOutcome {
    let score_delta = effects
        .iter()
        .map(|e| match e {
            Effect::BombDefused { points, .. } => *points,
            _ => 0,
        })
        .sum();
    ActionOutcome {
        agent,
        round,
        action,
        verdict,
        effects,
        score_delta,
    }
}

fn acted(round: u32, room: u32, witnesses: &[AgentId], outcome: ActionOutcome) -> EpistemicEvent {
    EpistemicEvent::Acted {
        round,
        room: RoomId(room),
        witnesses: witnesses.to_vec(),
        outcome,
    }
}

pub fn observe(round: u32, agent: AgentId, room: u32) -> EpistemicEvent {
    EpistemicEvent::Observed {
        round,
        agent,
        room: RoomId(room),
        bombs: Vec::new(),
    }
}

pub fn walk(
    round: u32,
    agent: AgentId,
    from: u32,
    to: u32,
    witnesses: &[AgentId],
) -> EpistemicEvent {
    let o = outcome(
        round,
        agent,
        Action::Move { room: RoomId(to) },
        Verdict::Ok,
        vec![Effect::MovedTo { room: RoomId(to) }],
    );
    acted(round, from, witnesses, o)
}

pub fn blocked(round: u32, agent: AgentId, from: u32, to: u32) -> EpistemicEvent {
    let o = outcome(
        round,
        agent,
        Action::Move { room: RoomId(to) },
        Verdict::RuleError(RuleError::NotAdjacent {
            target: RoomId(to),
            current: RoomId(from),
        }),
        Vec::new(),
    );
    acted(round, from, &[], o)
}

pub fn inspect(
    round: u32,
    agent: AgentId,
    room: u32,
    bomb: u32,
    witnesses: &[AgentId],
) -> EpistemicEvent {
    let o = outcome(
        round,
        agent,
        Action::Inspect,
        Verdict::Ok,
        vec![Effect::SequenceRevealed {
            bomb: BombId(bomb),
            sequence: vec![Color(0), Color(1)],
        }],
    );
    acted(round, room, witnesses, o)
}

pub fn failed_inspect(round: u32, agent: AgentId, room: u32) -> EpistemicEvent {
    let o = outcome(
        round,
        agent,
        Action::Inspect,
        Verdict::RuleError(RuleError::NoBombToInspect { room: RoomId(room) }),
        Vec::new(),
    );
    acted(round, room, &[], o)
}

/// Cuts one phase; the bomb stays live.
pub fn cut(
    round: u32,
    agent: AgentId,
    room: u32,
    bomb: u32,
    witnesses: &[AgentId],
) -> EpistemicEvent {
    let o = outcome(
        round,
        agent,
        Action::Apply { color: Color(0) },
        Verdict::Ok,
        vec![Effect::PhaseCut {
            bomb: BombId(bomb),
            color: Color(0),
        }],
    );
    acted(round, room, witnesses, o)
}

/// Cuts the last phase.
pub fn defuse(
    round: u32,
    agent: AgentId,
    room: u32,
    bomb: u32,
    witnesses: &[AgentId],
) -> EpistemicEvent {
    let o = outcome(
        round,
        agent,
        Action::Apply { color: Color(1) },
        Verdict::Ok,
        vec![
            Effect::PhaseCut {
                bomb: BombId(bomb),
                color: Color(1),
            },
            Effect::BombDefused {
                bomb: BombId(bomb),
                points: 10,
            },
        ],
    );
    acted(round, room, witnesses, o)
}

pub fn explode(
    round: u32,
    agent: AgentId,
    room: u32,
    bomb: u32,
    witnesses: &[AgentId],
) -> EpistemicEvent {
    let o = outcome(
        round,
        agent,
        Action::Apply { color: Color(2) },
        Verdict::Ok,
        vec![Effect::BombExploded { bomb: BombId(bomb) }],
    );
    acted(round, room, witnesses, o)
}

pub fn say(round: u32, sender: AgentId, claims: Vec<Claim>) -> EpistemicEvent {
    EpistemicEvent::Sent {
        round,
        sender,
        text: String::new(),
        claims: Some(claims),
    }
}

pub fn chat(round: u32, sender: AgentId, text: &str) -> EpistemicEvent {
    EpistemicEvent::Sent {
        round,
        sender,
        text: text.to_string(),
        claims: None,
    }
}

pub fn deliver(round: u32) -> EpistemicEvent {
    EpistemicEvent::Delivered { round }
}

pub fn claim_seq(bomb: u32) -> Claim {
    Claim::BombSequence {
        bomb: BombId(bomb),
        remaining: vec![Color(0), Color(1)],
    }
}

pub fn claim_room(room: u32, bombs: &[u32]) -> Claim {
    Claim::RoomContents {
        room: RoomId(room),
        bombs: bombs.iter().map(|b| BombId(*b)).collect(),
    }
}

pub fn claim_cut(bomb: u32, round: u32) -> Claim {
    Claim::PhaseCut {
        bomb: BombId(bomb),
        color: Color(0),
        remaining: vec![Color(1)],
        round,
    }
}

pub fn claim_defused(bomb: u32, round: u32) -> Claim {
    Claim::BombDefused {
        bomb: BombId(bomb),
        round,
    }
}

pub fn intent(room: u32) -> Claim {
    Claim::IntentMove { room: RoomId(room) }
}

#[derive(Debug, Clone)]
pub struct Check {
    pub chain: Vec<AgentId>,
    pub prop: Proposition,
    pub at_round: Option<u32>,
    pub expect: Truth,
}

fn q(chain: &[AgentId], prop: Proposition, expect: Truth) -> Check {
    Check {
        chain: chain.to_vec(),
        prop,
        at_round: None,
        expect,
    }
}

fn q_at(round: u32, chain: &[AgentId], prop: Proposition, expect: Truth) -> Check {
    Check {
        at_round: Some(round),
        ..q(chain, prop, expect)
    }
}

pub struct Scenario {
    pub name: &'static str,
    pub rules: &'static [&'static str],
    pub stale: StalePolicy,
    pub events: Vec<EpistemicEvent>,
    pub checks: Vec<Check>,
}

fn scenario(
    name: &'static str,
    rules: &'static [&'static str],
    events: Vec<EpistemicEvent>,
    checks: Vec<Check>,
) -> Scenario {
    Scenario {
        name,
        rules,
        stale: StalePolicy::No,
        events,
        checks,
    }
}

/// Charlie sees room 5, leaves for room 6, then Bravo defuses Bomb 3 there and Alpha walks in.
fn room_five_events() -> Vec<EpistemicEvent> {
    vec![
        observe(1, C, 5),
        walk(1, C, 5, 6, &[]),
        observe(2, B, 5),
        defuse(2, B, 5, 3, &[]),
        walk(3, A, 0, 5, &[]),
    ]
}

pub fn scenarios() -> Vec<Scenario> {
    vec![
        scenario(
            "inspect alone",
            &["own-action"],
            vec![inspect(1, A, 0, 1, &[])],
            vec![
                q(&[A], seq(1), Yes),
                q(&[B], seq(1), No),
                q(&[C], seq(1), No),
                q(&[B, A], seq(1), No),
                q(&[A, B], seq(1), No),
                q(&[A], rc(0), No),
            ],
        ),
        scenario(
            "inspect result stays private in company",
            &["own-action", "witnessed"],
            vec![inspect(1, A, 0, 1, &[B, C])],
            vec![
                q(&[A], seq(1), Yes),
                q(&[B], seq(1), No),
                q(&[B, A], seq(1), No),
                q(&[C, A], seq(1), No),
                q(&[A, B, A], seq(1), No),
            ],
        ),
        scenario(
            "witnessed defusal",
            &["own-action", "witnessed", "seen-learning"],
            vec![defuse(2, A, 0, 1, &[B])],
            vec![
                q(&[A], state(1, 2), Yes),
                q(&[B], state(1, 2), Yes),
                q(&[A, B], state(1, 2), Yes),
                q(&[B, A], state(1, 2), Yes),
                q(&[B, A, B], state(1, 2), Yes),
                q(&[A, B, A], state(1, 2), Yes),
                q(&[C], state(1, 2), No),
                q(&[C, A], state(1, 2), No),
                q(&[A, C], state(1, 2), No),
                q(&[B], phase(2), Yes),
                q(&[B], rc(0), Yes),
                q(&[C], rc(0), No),
                q(&[A], state(1, 1), No),
            ],
        ),
        scenario(
            "partial cut is private",
            &["own-action", "witnessed"],
            vec![cut(2, A, 0, 1, &[B])],
            vec![
                q(&[A], state(1, 2), Yes),
                q(&[A], phase(2), Yes),
                q(&[B], state(1, 2), No),
                q(&[B, A], state(1, 2), No),
                q(&[B], rc(0), No),
            ],
        ),
        scenario(
            "locations are common knowledge",
            &["locations"],
            Vec::new(),
            vec![
                q(&[C], loc(A), Yes),
                q(&[A], loc(A), Yes),
                q(&[B, C], loc(A), Yes),
                q(&[A, B, C], loc(A), Yes),
                q(&[A, A], loc(A), No),
                q(&[A, B, C, A], loc(A), No),
                q(&[], loc(A), No),
            ],
        ),
        scenario(
            "observation is known and seen",
            &["visited", "locations"],
            vec![observe(1, C, 5)],
            vec![
                q(&[C], rc(5), Yes),
                q(&[A, C], rc(5), Yes),
                q(&[C, A, C], rc(5), Yes),
                q(&[A], rc(5), No),
                q(&[C, A], rc(5), No),
            ],
        ),
        scenario(
            "arrival reveals the new room",
            &["own-action", "locations", "visited"],
            vec![walk(1, B, 0, 3, &[A])],
            vec![
                q(&[B], rc(3), Yes),
                q(&[A, B], rc(3), Yes),
                q(&[C, B], rc(3), Yes),
                q(&[A], rc(3), No),
                q(&[B], rc(0), No),
            ],
        ),
        scenario(
            "stale contents grade no",
            &["visited"],
            vec![
                observe(1, C, 5),
                walk(1, C, 5, 6, &[]),
                observe(2, B, 5),
                defuse(2, B, 5, 3, &[]),
            ],
            vec![
                q(&[C], rc(5), No),
                q_at(1, &[C], rc(5), Yes),
                q(&[B], rc(5), Yes),
                q(&[A, C], rc(5), No),
                q(&[C], state(3, 2), No),
            ],
        ),
        Scenario {
            stale: StalePolicy::Yes,
            ..scenario(
                "stale contents under as-of-visit semantics",
                &["visited"],
                vec![
                    observe(1, C, 5),
                    walk(1, C, 5, 6, &[]),
                    observe(2, B, 5),
                    defuse(2, B, 5, 3, &[]),
                ],
                vec![
                    q(&[C], rc(5), Yes),
                    q(&[A, C], rc(5), Yes),
                    q(&[A], rc(5), No),
                ],
            )
        },
        Scenario {
            stale: StalePolicy::Ambiguous,
            ..scenario(
                "stale contents flagged ambiguous",
                &["visited"],
                vec![
                    observe(1, C, 5),
                    walk(1, C, 5, 6, &[]),
                    observe(2, B, 5),
                    defuse(2, B, 5, 3, &[]),
                ],
                vec![
                    q(&[C], rc(5), Amb),
                    q_at(1, &[C], rc(5), Yes),
                    q(&[B], rc(5), Yes),
                ],
            )
        },
        scenario(
            "room 5 case study",
            &["witnessed", "visited", "claims", "relayed"],
            {
                let mut e = room_five_events();
                e.push(say(3, A, vec![intent(5), claim_room(5, &[])]));
                e.push(deliver(4));
                e
            },
            vec![
                q_at(3, &[C], rc(5), No),
                q_at(3, &[A], rc(5), Yes),
                q_at(3, &[C, A], rc(5), Yes),
                q_at(3, &[B], rc(5), Yes),
                q_at(3, &[A, C, A], rc(5), Yes),
                q(&[C], rc(5), Yes),
                q(&[A, C], rc(5), Yes),
                q(&[A, C, A], rc(5), Yes),
                q(&[B, C], rc(5), Yes),
            ],
        ),
        scenario(
            "structured sequence claim",
            &["claims", "relayed"],
            vec![
                inspect(1, A, 0, 1, &[]),
                say(1, A, vec![claim_seq(1)]),
                deliver(2),
            ],
            vec![
                q_at(1, &[B], seq(1), No),
                q_at(1, &[B, A], seq(1), No),
                q(&[B], seq(1), Yes),
                q(&[C], seq(1), Yes),
                q(&[B, A], seq(1), Yes),
                q(&[A, B], seq(1), Yes),
                q(&[A, C, A], seq(1), Yes),
                q(&[B, C], seq(1), Yes),
            ],
        ),
        scenario(
            "claim the sender cannot back",
            &["claims"],
            vec![say(1, A, vec![claim_seq(2)]), deliver(2)],
            vec![
                q(&[B], seq(2), Amb),
                q(&[B, A], seq(2), Amb),
                q(&[A], seq(2), No),
                q_at(1, &[B], seq(2), No),
            ],
        ),
        scenario(
            "free text grades ambiguous",
            &["claims"],
            vec![
                inspect(1, A, 0, 1, &[]),
                chat(1, A, "Bomb 1 is red then green."),
                deliver(2),
            ],
            vec![
                q(&[A], seq(1), Yes),
                q(&[B], seq(1), Amb),
                q(&[C, A], seq(1), Amb),
                q(&[B], seq(2), No),
            ],
        ),
        scenario(
            "free text in flight",
            &["claims"],
            vec![
                inspect(1, A, 0, 1, &[]),
                chat(1, A, "Bomb 1 is red then green."),
            ],
            vec![q(&[B], seq(1), No), q(&[A], seq(1), Yes)],
        ),
        scenario(
            "witnessed explosion",
            &["witnessed", "visited", "seen-learning"],
            vec![observe(1, B, 1), explode(2, A, 1, 2, &[C])],
            vec![
                q(&[C], state(2, 2), Yes),
                q(&[A, C], state(2, 2), Yes),
                q(&[C, A, C], state(2, 2), Yes),
                q(&[B], state(2, 2), No),
                q(&[A], phase(2), No),
                q(&[C], rc(1), Yes),
                q(&[B], rc(1), No),
            ],
        ),
        scenario(
            "lone defusal then report",
            &["own-action", "claims", "relayed"],
            vec![
                defuse(2, A, 0, 1, &[]),
                say(2, A, vec![claim_cut(1, 2)]),
                deliver(3),
            ],
            vec![
                q_at(2, &[B], state(1, 2), No),
                q_at(2, &[B, A], state(1, 2), No),
                q_at(2, &[A, B], state(1, 2), No),
                q(&[C], state(1, 2), Yes),
                q(&[C], phase(2), Yes),
                q(&[B, C], state(1, 2), Yes),
                q(&[C, A], state(1, 2), Yes),
                q(&[C], seq(1), No),
            ],
        ),
        scenario(
            "cut makes a shared sequence stale",
            &["own-action", "visited", "claims"],
            vec![
                inspect(1, A, 0, 1, &[]),
                say(1, A, vec![claim_seq(1)]),
                deliver(2),
                cut(2, A, 0, 1, &[B]),
            ],
            vec![
                q(&[A], seq(1), Yes),
                q(&[B], seq(1), No),
                q(&[B, A], seq(1), No),
                q(&[A, B], seq(1), No),
                q_at(1, &[A], seq(1), Yes),
                q(&[B], state(1, 2), No),
            ],
        ),
        scenario(
            "untouched sequence stays known",
            &["own-action", "visited"],
            vec![
                inspect(1, A, 0, 1, &[]),
                walk(2, A, 0, 3, &[]),
                defuse(3, B, 4, 2, &[C]),
                walk(4, A, 3, 0, &[]),
            ],
            vec![
                q_at(1, &[A], seq(1), Yes),
                q_at(2, &[A], seq(1), Yes),
                q_at(3, &[A], seq(1), Yes),
                q(&[A], seq(1), Yes),
                q(&[A], state(2, 3), No),
                q(&[C], state(2, 3), Yes),
            ],
        ),
        scenario(
            "room 8 false belief",
            &["failed-intent"],
            vec![
                walk(3, A, 0, 3, &[]),
                say(4, A, vec![intent(8)]),
                blocked(4, A, 3, 8),
                deliver(5),
            ],
            vec![
                q(&[C, A], rc(8), Amb),
                q(&[B, A], rc(8), Amb),
                q(&[A, C, A], rc(8), Amb),
                q(&[A], rc(8), No),
                q(&[C], rc(8), No),
                q(&[C, A], rc(3), Yes),
            ],
        ),
        scenario(
            "kept intent is plain knowledge",
            &["failed-intent", "locations"],
            vec![
                say(3, A, vec![intent(5)]),
                walk(3, A, 0, 5, &[]),
                deliver(4),
            ],
            vec![
                q(&[C, A], rc(5), Yes),
                q(&[A], rc(5), Yes),
                q(&[C], rc(5), No),
            ],
        ),
        scenario(
            "relaying what one never saw",
            &["own-action", "witnessed", "claims"],
            vec![
                inspect(1, B, 2, 3, &[A, C]),
                say(1, A, vec![claim_seq(3)]),
                deliver(2),
            ],
            vec![
                q(&[B], seq(3), Yes),
                q(&[A], seq(3), No),
                q(&[C], seq(3), Amb),
                q(&[C, B], seq(3), Amb),
            ],
        ),
        scenario(
            "messages arrive one round late",
            &["claims", "relayed"],
            vec![
                observe(1, A, 0),
                say(1, A, vec![claim_room(0, &[])]),
                deliver(2),
                inspect(2, B, 1, 1, &[]),
                say(2, B, vec![claim_seq(1)]),
                deliver(3),
            ],
            vec![
                q_at(1, &[C], rc(0), No),
                q_at(2, &[C], rc(0), Yes),
                q_at(2, &[C], seq(1), No),
                q(&[C], seq(1), Yes),
                q(&[A, B], seq(1), Yes),
                q(&[B, A], rc(0), Yes),
            ],
        ),
        scenario(
            "change seen by those present",
            &["witnessed", "visited", "seen-learning"],
            vec![
                observe(1, A, 2),
                observe(1, B, 2),
                observe(1, C, 2),
                walk(1, C, 2, 1, &[A, B]),
                defuse(2, A, 2, 4, &[B]),
            ],
            vec![
                q(&[B], rc(2), Yes),
                q(&[A, B], rc(2), Yes),
                q(&[B, A, B], rc(2), Yes),
                q(&[C], rc(2), No),
                q(&[C, A], rc(2), No),
                q(&[A, C], rc(2), No),
                q_at(1, &[C, A], rc(2), Yes),
            ],
        ),
        scenario(
            "rule errors teach nothing",
            &["own-action"],
            vec![failed_inspect(1, A, 0), blocked(1, B, 0, 8)],
            vec![q(&[A], seq(1), No), q(&[B], rc(8), No), q(&[A], rc(0), No)],
        ),
        scenario(
            "bomb location claims grant no contents",
            &["claims"],
            vec![
                say(
                    1,
                    A,
                    vec![Claim::BombLocation {
                        bomb: BombId(1),
                        room: RoomId(3),
                    }],
                ),
                deliver(2),
            ],
            vec![q(&[B], rc(3), No), q(&[B], seq(1), No)],
        ),
        scenario(
            "defusal claim without a witness",
            &["claims", "relayed"],
            vec![
                defuse(2, B, 1, 2, &[]),
                say(2, B, vec![claim_defused(2, 2)]),
                deliver(3),
            ],
            vec![
                q(&[A], state(2, 2), Yes),
                q(&[A, B], state(2, 2), Yes),
                q(&[B, A], phase(2), Yes),
                q(&[A], seq(2), No),
            ],
        ),
    ]
}

/// Every well-formed chain of length 1 to 3 over `n` agents.
pub fn all_chains(n: usize) -> Vec<Vec<AgentId>> {
    let mut out: Vec<Vec<AgentId>> = (0..n).map(|a| vec![AgentId(a)]).collect();
    let mut frontier = out.clone();
    for _ in 1..3 {
        let mut next = Vec::new();
        for c in &frontier {
            for a in (0..n).map(AgentId) {
                if a != c[0] {
                    let mut d = vec![a];
                    d.extend_from_slice(c);
                    next.push(d);
                }
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

/// Propositions mentioned anywhere in `events`, plus every phase/bomb-state pair up to the last round.
pub fn universe(events: &[EpistemicEvent]) -> Vec<Proposition> {
    let mut rooms = BTreeSet::new();
    let mut bombs = BTreeSet::new();
    let mut last_round = 1;
    for e in events {
        last_round = last_round.max(e.round());
        match e {
            EpistemicEvent::Observed { room, .. } => {
                rooms.insert(room.0);
            }
            EpistemicEvent::Acted { room, outcome, .. } => {
                rooms.insert(room.0);
                if let Verdict::RuleError(RuleError::NotAdjacent { target, .. }) = &outcome.verdict
                {
                    rooms.insert(target.0);
                }
                for effect in &outcome.effects {
                    match effect {
                        Effect::MovedTo { room } => {
                            rooms.insert(room.0);
                        }
                        Effect::SequenceRevealed { bomb, .. }
                        | Effect::PhaseCut { bomb, .. }
                        | Effect::BombDefused { bomb, .. }
                        | Effect::BombExploded { bomb } => {
                            bombs.insert(bomb.0);
                        }
                    }
                }
            }
            EpistemicEvent::Sent { claims, .. } => {
                for claim in claims.iter().flatten() {
                    match claim {
                        Claim::RoomContents { room, .. } | Claim::IntentMove { room } => {
                            rooms.insert(room.0);
                        }
                        Claim::BombLocation { bomb, room } => {
                            rooms.insert(room.0);
                            bombs.insert(bomb.0);
                        }
                        Claim::BombSequence { bomb, .. }
                        | Claim::BombDefused { bomb, .. }
                        | Claim::PhaseCut { bomb, .. } => {
                            bombs.insert(bomb.0);
                        }
                    }
                }
            }
            EpistemicEvent::Delivered { .. } => {}
        }
    }
    let mut out: Vec<Proposition> = rooms.iter().map(|r| rc(*r)).collect();
    out.extend(bombs.iter().map(|b| seq(*b)));
    for r in 1..=last_round {
        out.push(phase(r));
        out.extend(bombs.iter().map(|b| state(*b, r)));
    }
    out.extend((0..3).map(|a| loc(AgentId(a))));
    out
}

/// What one event tells whom: `learners` know `prop`, everyone in `audience` sees them learn it.
#[derive(Debug, Clone)]
struct Lesson {
    learners: Vec<AgentId>,
    audience: Vec<AgentId>,
    prop: Proposition,
    event: usize,
    evidence: usize,
}

struct Message {
    sender: AgentId,
    round: u32,
    delivered: bool,
    backed: Vec<(Proposition, usize)>,
    unbacked: Vec<Proposition>,
    free_text: bool,
    intent: Option<RoomId>,
    knew: BTreeSet<Proposition>,
}

/// Reference semantics, replayed from scratch: every event becomes lessons, lessons are
/// closed under "a watcher knows what a learner knows" up to length-3 chains, and queries
/// look for the freshest evidence per (chain, proposition).
pub struct Reference {
    n: usize,
    stale: StalePolicy,
    events: Vec<EpistemicEvent>,
    facts: BTreeMap<(Vec<AgentId>, Proposition), usize>,
    changes: BTreeMap<Proposition, usize>,
    messages: Vec<Message>,
}

impl Reference {
    pub fn build(n: usize, stale: StalePolicy, events: &[EpistemicEvent]) -> Self {
        let mut lessons: Vec<Lesson> = Vec::new();
        let mut changes: BTreeMap<Proposition, usize> = BTreeMap::new();
        let mut messages: Vec<Message> = Vec::new();
        let everyone: Vec<AgentId> = (0..n).map(AgentId).collect();
        for (i, e) in events.iter().enumerate() {
            // knowledge as it stood just before event i
            let before = Self::close(&lessons, i);
            let fresh = |who: AgentId, p: &Proposition| -> Option<usize> {
                let ev = *before.get(&(vec![who], p.clone()))?;
                match changes.get(p) {
                    Some(c) if ev < *c => None,
                    _ => Some(ev),
                }
            };
            match e {
                EpistemicEvent::Observed { agent, room, .. } => lessons.push(Lesson {
                    learners: vec![*agent],
                    audience: everyone.clone(),
                    prop: Proposition::RoomContents { room: *room },
                    event: i,
                    evidence: i,
                }),
                EpistemicEvent::Acted {
                    room,
                    witnesses,
                    outcome,
                    ..
                } => {
                    let actor = outcome.agent;
                    let mut present: BTreeSet<AgentId> = witnesses.iter().copied().collect();
                    present.insert(actor);
                    let present: Vec<AgentId> = present.into_iter().collect();
                    let gone: BTreeSet<BombId> = outcome
                        .effects
                        .iter()
                        .filter_map(|f| match f {
                            Effect::BombDefused { bomb, .. } | Effect::BombExploded { bomb } => {
                                Some(*bomb)
                            }
                            _ => None,
                        })
                        .collect();
                    let mut new_changes = Vec::new();
                    for f in &outcome.effects {
                        match f {
                            Effect::MovedTo { room } => lessons.push(Lesson {
                                learners: vec![actor],
                                audience: everyone.clone(),
                                prop: Proposition::RoomContents { room: *room },
                                event: i,
                                evidence: i,
                            }),
                            Effect::SequenceRevealed { bomb, .. } => lessons.push(Lesson {
                                learners: vec![actor],
                                audience: vec![actor],
                                prop: Proposition::BombSequence { bomb: *bomb },
                                event: i,
                                evidence: i,
                            }),
                            Effect::PhaseCut { bomb, .. } => {
                                let sp = Proposition::BombSequence { bomb: *bomb };
                                let knew = fresh(actor, &sp).is_some();
                                new_changes.push(sp.clone());
                                let who = if gone.contains(bomb) {
                                    present.clone()
                                } else {
                                    vec![actor]
                                };
                                for prop in [
                                    Proposition::BombStateChanged {
                                        bomb: *bomb,
                                        round: outcome.round,
                                    },
                                    Proposition::PhaseDefused {
                                        round: outcome.round,
                                    },
                                ] {
                                    lessons.push(Lesson {
                                        learners: who.clone(),
                                        audience: who.clone(),
                                        prop,
                                        event: i,
                                        evidence: i,
                                    });
                                }
                                if knew {
                                    lessons.push(Lesson {
                                        learners: vec![actor],
                                        audience: vec![actor],
                                        prop: sp,
                                        event: i,
                                        evidence: i,
                                    });
                                }
                            }
                            Effect::BombExploded { bomb } => {
                                new_changes.push(Proposition::BombSequence { bomb: *bomb });
                                lessons.push(Lesson {
                                    learners: present.clone(),
                                    audience: present.clone(),
                                    prop: Proposition::BombStateChanged {
                                        bomb: *bomb,
                                        round: outcome.round,
                                    },
                                    event: i,
                                    evidence: i,
                                });
                            }
                            Effect::BombDefused { .. } => {}
                        }
                    }
                    if !gone.is_empty() {
                        new_changes.push(Proposition::RoomContents { room: *room });
                        lessons.push(Lesson {
                            learners: present.clone(),
                            audience: present.clone(),
                            prop: Proposition::RoomContents { room: *room },
                            event: i,
                            evidence: i,
                        });
                    }
                    for p in new_changes {
                        changes.insert(p, i);
                    }
                }
                EpistemicEvent::Sent {
                    round,
                    sender,
                    claims,
                    ..
                } => {
                    let mut m = Message {
                        sender: *sender,
                        round: *round,
                        delivered: false,
                        backed: Vec::new(),
                        unbacked: Vec::new(),
                        free_text: claims.is_none(),
                        intent: None,
                        knew: BTreeSet::new(),
                    };
                    if claims.is_none() {
                        m.knew = before
                            .keys()
                            .filter(|(c, p)| *c == [*sender] && fresh(*sender, p).is_some())
                            .map(|(_, p)| p.clone())
                            .collect();
                    }
                    for claim in claims.iter().flatten() {
                        let (props, optional_seq) = match claim {
                            Claim::RoomContents { room, .. } => {
                                (vec![Proposition::RoomContents { room: *room }], false)
                            }
                            Claim::BombSequence { bomb, .. } => {
                                (vec![Proposition::BombSequence { bomb: *bomb }], false)
                            }
                            Claim::BombDefused { bomb, round } => (
                                vec![
                                    Proposition::BombStateChanged {
                                        bomb: *bomb,
                                        round: *round,
                                    },
                                    Proposition::PhaseDefused { round: *round },
                                ],
                                false,
                            ),
                            Claim::PhaseCut { bomb, round, .. } => (
                                vec![
                                    Proposition::BombStateChanged {
                                        bomb: *bomb,
                                        round: *round,
                                    },
                                    Proposition::PhaseDefused { round: *round },
                                    Proposition::BombSequence { bomb: *bomb },
                                ],
                                true,
                            ),
                            Claim::BombLocation { .. } => (Vec::new(), false),
                            Claim::IntentMove { room } => {
                                m.intent = Some(*room);
                                (Vec::new(), false)
                            }
                        };
                        for p in props {
                            match fresh(*sender, &p) {
                                Some(ev) => {
                                    if !m.backed.iter().any(|(q, _)| *q == p) {
                                        m.backed.push((p, ev));
                                    }
                                }
                                None => {
                                    let skip = optional_seq
                                        && matches!(p, Proposition::BombSequence { .. });
                                    if !skip && !m.unbacked.contains(&p) {
                                        m.unbacked.push(p);
                                    }
                                }
                            }
                        }
                    }
                    messages.push(m);
                }
                EpistemicEvent::Delivered { .. } => {
                    for m in messages.iter_mut().filter(|m| !m.delivered) {
                        m.delivered = true;
                        for (p, ev) in &m.backed {
                            lessons.push(Lesson {
                                learners: everyone.clone(),
                                audience: everyone.clone(),
                                prop: p.clone(),
                                event: i,
                                evidence: *ev,
                            });
                        }
                    }
                }
            }
        }
        Reference {
            n,
            stale,
            events: events.to_vec(),
            facts: Self::close(&lessons, events.len()),
            changes,
            messages,
        }
    }

    /// Fixpoint of the watcher rule over lessons from events before `upto`, keeping the
    /// newest evidence per (chain, proposition).
    fn close(lessons: &[Lesson], upto: usize) -> BTreeMap<(Vec<AgentId>, Proposition), usize> {
        let mut known: BTreeSet<(Vec<AgentId>, Proposition, usize, usize)> = BTreeSet::new();
        for (k, l) in lessons.iter().enumerate().filter(|(_, l)| l.event < upto) {
            for a in &l.learners {
                known.insert((vec![*a], l.prop.clone(), l.evidence, k));
            }
        }
        loop {
            let mut grown = known.clone();
            for (chain, prop, ev, k) in &known {
                if chain.len() >= 3 {
                    continue;
                }
                for w in &lessons[*k].audience {
                    if *w != chain[0] {
                        let mut c = vec![*w];
                        c.extend_from_slice(chain);
                        grown.insert((c, prop.clone(), *ev, *k));
                    }
                }
            }
            if grown.len() == known.len() {
                break;
            }
            known = grown;
        }
        let mut out: BTreeMap<(Vec<AgentId>, Proposition), usize> = BTreeMap::new();
        for (chain, prop, ev, _) in known {
            let slot = out.entry((chain, prop)).or_insert(ev);
            *slot = (*slot).max(ev);
        }
        out
    }

    pub fn truth(&self, chain: &[AgentId], prop: &Proposition) -> Truth {
        let well_formed = !chain.is_empty()
            && chain.len() <= 3
            && chain.iter().all(|a| a.0 < self.n)
            && chain.windows(2).all(|w| w[0] != w[1]);
        if !well_formed {
            return No;
        }
        if matches!(prop, Proposition::Location { .. }) {
            return Yes;
        }
        if let Some(ev) = self.facts.get(&(chain.to_vec(), prop.clone())) {
            let stale = self.changes.get(prop).is_some_and(|c| ev < c);
            if !stale {
                return Yes;
            }
            match self.stale {
                StalePolicy::Yes => return Yes,
                StalePolicy::Ambiguous => return Amb,
                StalePolicy::No => {}
            }
        }
        for m in &self.messages {
            if let (Some(room), Proposition::RoomContents { room: asked }) = (m.intent, prop) {
                let broken = self.events.iter().any(|e| match e {
                    EpistemicEvent::Acted { round, outcome, .. } => {
                        *round == m.round
                            && outcome.agent == m.sender
                            && !outcome.effects.contains(&Effect::MovedTo { room })
                    }
                    _ => false,
                });
                if room == *asked && chain.len() >= 2 && chain.last() == Some(&m.sender) && broken {
                    return Amb;
                }
            }
            if !m.delivered || chain == [m.sender] {
                continue;
            }
            if m.unbacked.contains(prop) || (m.free_text && m.knew.contains(prop)) {
                return Amb;
            }
        }
        No
    }
}

/// Compares the log against the hand annotations, the reference oracle, and its own
/// from-scratch rebuild. Returns (checks run, failures).
pub fn scenario_mismatches() -> (usize, usize, Vec<String>) {
    let mut checked = 0;
    let mut failures = Vec::new();
    let all = scenarios();
    for s in &all {
        let mut log = EpistemicLog::new(3, s.stale);
        for e in &s.events {
            if let Err(err) = log.propagate(e.clone()) {
                failures.push(format!("{}: propagate failed: {err}", s.name));
            }
        }
        match EpistemicLog::from_events(3, s.stale, &s.events) {
            Ok(rebuilt) if rebuilt == log => {}
            Ok(_) => failures.push(format!("{}: incremental and rebuilt logs differ", s.name)),
            Err(err) => failures.push(format!("{}: rebuild failed: {err}", s.name)),
        }
        for c in &s.checks {
            checked += 1;
            let got = match c.at_round {
                Some(r) => log.query_at_round(&c.chain, &c.prop, r),
                None => log.query(&c.chain, &c.prop),
            };
            if got != c.expect {
                failures.push(format!(
                    "{}: {:?} {:?}{} expected {:?}, got {:?}",
                    s.name,
                    c.chain,
                    c.prop,
                    c.at_round
                        .map(|r| format!(" at round {r}"))
                        .unwrap_or_default(),
                    c.expect,
                    got
                ));
            }
            let upto = match c.at_round {
                Some(r) => s.events.partition_point(|e| e.round() <= r),
                None => s.events.len(),
            };
            let reference =
                Reference::build(3, s.stale, &s.events[..upto]).truth(&c.chain, &c.prop);
            if reference != c.expect {
                failures.push(format!(
                    "{}: reference oracle disagrees with annotation on {:?} {:?}: {:?}",
                    s.name, c.chain, c.prop, reference
                ));
            }
        }
    }
    (all.len(), checked, failures)
}

/// Building blocks for exhaustive enumeration. Rounds advance on each delivery.
pub fn vocabulary() -> Vec<fn(u32) -> EpistemicEvent> {
    vec![
        |r| observe(r, A, 1),
        |r| observe(r, C, 1),
        |r| walk(r, B, 0, 1, &[]),
        |r| inspect(r, A, 1, 1, &[C]),
        |r| inspect(r, C, 1, 2, &[]),
        |r| defuse(r, A, 1, 1, &[C]),
        |r| cut(r, C, 1, 2, &[A]),
        |r| explode(r, B, 1, 2, &[A, C]),
        |r| say(r, A, vec![claim_seq(1)]),
        |r| say(r, C, vec![claim_room(1, &[]), claim_cut(2, r)]),
        |r| chat(r, B, "Bomb 2 is in room 1."),
        |r| say(r, B, vec![intent(2)]),
        |r| blocked(r, B, 0, 2),
        deliver,
    ]
}

/// Materializes a word over the vocabulary.
pub fn sequence(word: &[usize]) -> Vec<EpistemicEvent> {
    let vocab = vocabulary();
    let mut round = 1;
    word.iter()
        .map(|i| {
            if *i == vocab.len() - 1 {
                round += 1;
            }
            vocab[*i](round)
        })
        .collect()
}

/// Every word of length `len` over `alphabet` symbols.
pub fn words(alphabet: usize, len: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|w| {
                (0..alphabet).map(move |s| {
                    let mut v = w.clone();
                    v.push(s);
                    v
                })
            })
            .collect();
    }
    out
}

/// Disagreements between the log and the reference oracle over every (chain, proposition).
pub fn reference_mismatches(stale: StalePolicy, events: &[EpistemicEvent]) -> Vec<String> {
    let log = match EpistemicLog::from_events(3, stale, events) {
        Ok(l) => l,
        Err(e) => return vec![format!("rejected: {e}")],
    };
    let reference = Reference::build(3, stale, events);
    let mut out = Vec::new();
    for chain in all_chains(3) {
        for prop in universe(events) {
            let (got, want) = (log.query(&chain, &prop), reference.truth(&chain, &prop));
            if got != want {
                out.push(format!(
                    "{chain:?} {prop:?}: log {got:?}, reference {want:?}"
                ));
            }
        }
    }
    out
}
