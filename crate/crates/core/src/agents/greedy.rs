use std::collections::{BTreeMap, BTreeSet, VecDeque};

use super::memory::AgentReply;
use super::policy::{AnswerInput, Policy, ToMAnswer, TurnInput};
use crate::belief::{
    reference_update, BeliefDoc, BombIntel, BombStatus, SequenceIntel, DEFAULT_OBSERVATION_CAP,
};
use crate::epistemic::{Proposition, ToMLevel, ToMQuestion};
use crate::textio::{canonical_reply, join_list};
use crate::world::{Action, AgentId, BombId, Claim, Color, Effect, Palette, RoomId};

/// Scripted heuristic team member.
///
/// Priorities: inspect unknown bombs here, cut a held head color here, walk to the nearest
/// bomb worth visiting, explore the nearest unexplored room. When several co-located agents
/// hold a head color the lowest index cuts and the others stay clear, so nobody acts on a
/// sequence a teammate changed earlier in the same round.
pub struct GreedyPolicy {
    me: AgentId,
    n_agents: usize,
    /// Private working copy, kept current with the reference updater.
    doc: BeliefDoc,
    explored: BTreeSet<RoomId>,
    /// Agents known to know each bomb's current sequence.
    seq_known_by: BTreeMap<BombId, BTreeSet<AgentId>>,
    /// Sequence claims this agent sent that teammates have not received yet.
    pending: Vec<BombId>,
}

impl GreedyPolicy {
    /// `initial` is the agent's opening belief document.
    pub fn new(me: AgentId, n_agents: usize, initial: BeliefDoc) -> Self {
        GreedyPolicy {
            me,
            n_agents,
            doc: initial,
            explored: BTreeSet::new(),
            seq_known_by: BTreeMap::new(),
            pending: Vec::new(),
        }
    }

    fn everyone(&self) -> BTreeSet<AgentId> {
        (0..self.n_agents).map(AgentId).collect()
    }

    fn absorb(&mut self, input: &TurnInput) {
        let obs = input.observation;
        self.explored.insert(obs.room);
        for b in std::mem::take(&mut self.pending) {
            self.seq_known_by.insert(b, self.everyone());
        }
        for m in &obs.messages {
            for claim in m.claims.iter().flatten() {
                match claim {
                    Claim::RoomContents { room, .. } => {
                        self.explored.insert(*room);
                    }
                    Claim::BombSequence { bomb, .. } | Claim::PhaseCut { bomb, .. } => {
                        self.seq_known_by.insert(*bomb, self.everyone());
                    }
                    _ => {}
                }
            }
        }
    }

    fn decide(&self, input: &TurnInput, doc: &BeliefDoc) -> (Action, Vec<Claim>) {
        let obs = input.observation;
        let here = obs.room;
        let adj = adjacency(doc);
        let routes = bfs(&adj, here);
        let mut claims = vec![Claim::RoomContents {
            room: here,
            bombs: obs.room_bombs.iter().map(|(b, _)| *b).collect(),
        }];
        let known = |b: BombId| match doc.bombs.get(&b) {
            Some(BombIntel::Known {
                sequence: SequenceIntel::Known(s),
                status: BombStatus::Active,
                ..
            }) => Some(s.clone()),
            _ => None,
        };
        for (b, _) in &obs.room_bombs {
            if let Some(s) = known(*b) {
                claims.push(Claim::BombSequence {
                    bomb: *b,
                    remaining: s,
                });
            }
        }

        if obs.room_bombs.iter().any(|(b, _)| known(*b).is_none()) {
            return (Action::Inspect, claims);
        }

        let holds = |agent: usize, c: Color| {
            doc.tools
                .get(agent)
                .is_some_and(|(_, tools)| tools.contains(&c))
        };
        for (b, _) in &obs.room_bombs {
            let Some(seq) = known(*b) else { continue };
            let Some(&head) = seq.first() else { continue };
            if !obs.tools.contains(&head) {
                continue;
            }
            let deferred = obs
                .co_located
                .iter()
                .any(|j| j.0 < self.me.0 && holds(j.0, head));
            if deferred {
                continue;
            }
            let remaining = seq[1..].to_vec();
            claims.retain(|c| !matches!(c, Claim::BombSequence { bomb, .. } if bomb == b));
            if remaining.is_empty() {
                claims.push(Claim::BombDefused {
                    bomb: *b,
                    round: obs.round,
                });
            }
            claims.push(Claim::PhaseCut {
                bomb: *b,
                color: head,
                remaining,
                round: obs.round,
            });
            return (Action::Apply { color: head }, claims);
        }

        let step_to = |room: RoomId, claims: &mut Vec<Claim>| {
            let step = routes.get(&room)?.1?;
            claims.push(Claim::IntentMove { room: step });
            Some(Action::Move { room: step })
        };

        let mut targets: Vec<(u32, BombId, RoomId)> = Vec::new();
        for (b, intel) in &doc.bombs {
            let BombIntel::Known {
                location: Some(r),
                sequence,
                status: BombStatus::Active,
                ..
            } = intel
            else {
                continue;
            };
            if *r == here {
                continue;
            }
            let wanted = match sequence {
                SequenceIntel::Known(s) => s.first().is_some_and(|c| obs.tools.contains(c)),
                SequenceIntel::Unknown | SequenceIntel::Partial(_) => true,
            };
            if let (true, Some((d, _))) = (wanted, routes.get(r)) {
                targets.push((*d, *b, *r));
            }
        }
        if let Some(&(_, _, room)) = targets.iter().min() {
            if let Some(a) = step_to(room, &mut claims) {
                return (a, claims);
            }
        }

        let occupied: BTreeSet<RoomId> = obs
            .teammate_locations
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != self.me.0)
            .map(|(_, (_, r))| *r)
            .collect();
        let unexplored: Vec<(u32, RoomId)> = routes
            .iter()
            .filter(|(r, _)| !self.explored.contains(r))
            .map(|(r, (d, _))| (*d, *r))
            .collect();
        let free: Vec<(u32, RoomId)> = unexplored
            .iter()
            .copied()
            .filter(|(_, r)| !occupied.contains(r))
            .collect();
        let pool = if free.is_empty() { &unexplored } else { &free };
        if let Some(&(best, _)) = pool.iter().min() {
            let ties: Vec<RoomId> = pool
                .iter()
                .filter(|(d, _)| *d == best)
                .map(|(_, r)| *r)
                .collect();
            let room = ties[self.me.0 % ties.len()];
            if let Some(a) = step_to(room, &mut claims) {
                return (a, claims);
            }
        }

        if !obs.room_bombs.is_empty() {
            return (Action::Inspect, claims);
        }
        let mut later: Vec<(u32, BombId, RoomId)> = Vec::new();
        for (b, intel) in &doc.bombs {
            if let BombIntel::Known {
                location: Some(r),
                sequence: SequenceIntel::Known(s),
                status: BombStatus::Active,
                ..
            } = intel
            {
                if s.iter().any(|c| obs.tools.contains(c)) {
                    if let Some((d, _)) = routes.get(r) {
                        later.push((*d, *b, *r));
                    }
                }
            }
        }
        if let Some(&(_, _, room)) = later.iter().min() {
            if let Some(a) = step_to(room, &mut claims) {
                return (a, claims);
            }
        }
        match obs.adjacent.iter().min() {
            Some(r) => {
                claims.push(Claim::IntentMove { room: *r });
                (Action::Move { room: *r }, claims)
            }
            None => (Action::Inspect, claims),
        }
    }
}

impl Policy for GreedyPolicy {
    fn kind(&self) -> &'static str {
        "greedy"
    }

    fn act(&mut self, input: &TurnInput) -> AgentReply {
        self.absorb(input);
        let obs = input.observation;
        self.doc = reference_update(
            &self.doc,
            obs,
            input.last_outcome,
            &obs.messages,
            DEFAULT_OBSERVATION_CAP,
        );
        let (action, claims) = self.decide(input, &self.doc);
        for c in &claims {
            match c {
                Claim::BombSequence { bomb, .. } | Claim::PhaseCut { bomb, .. } => {
                    self.pending.push(*bomb)
                }
                _ => {}
            }
        }
        if let Action::Apply { .. } = action {
            for c in &claims {
                if let Claim::PhaseCut { bomb, .. } = c {
                    self.seq_known_by.insert(*bomb, BTreeSet::from([self.me]));
                }
            }
        }
        let message = describe_claims(&claims, input.palette);
        AgentReply {
            claims: Some(claims),
            ..AgentReply::text(canonical_reply(&action, &message, input.palette))
        }
    }

    fn answer(&mut self, q: &ToMQuestion, input: &AnswerInput) -> ToMAnswer {
        let obs = input.observation;
        let outcome = input.outcome;
        let my_room = outcome
            .effects
            .iter()
            .find_map(|e| match e {
                Effect::MovedTo { room } => Some(*room),
                _ => None,
            })
            .unwrap_or(obs.room);
        for e in &outcome.effects {
            if let Effect::SequenceRevealed { bomb, .. } = e {
                self.seq_known_by.entry(*bomb).or_default().insert(self.me);
            }
        }
        let located = |t: AgentId| obs.teammate_locations.get(t.0).map(|(_, r)| *r);
        let terminal = |bomb: Option<BombId>| {
            outcome.effects.iter().any(|e| match e {
                Effect::BombDefused { bomb: b, .. } | Effect::BombExploded { bomb: b } => {
                    bomb.is_none_or(|x| x == *b)
                }
                _ => false,
            })
        };
        let knows_sequence =
            |t: AgentId, b: BombId| self.seq_known_by.get(&b).is_some_and(|s| s.contains(&t));
        let yes = match (q.level, q.target) {
            (ToMLevel::Introspection, _) | (_, None) => match &q.proposition {
                Proposition::RoomContents { room } => *room == my_room,
                Proposition::BombSequence { bomb } => knows_sequence(self.me, *bomb),
                _ => true,
            },
            (level, Some(t)) => match &q.proposition {
                Proposition::Location { .. } => true,
                Proposition::RoomContents { room } => {
                    level == ToMLevel::SecondOrder || located(t) == Some(*room)
                }
                Proposition::BombSequence { bomb } => knows_sequence(t, *bomb),
                Proposition::BombStateChanged { bomb, .. } => {
                    terminal(Some(*bomb)) && located(t) == Some(my_room)
                }
                Proposition::PhaseDefused { .. } => terminal(None) && located(t) == Some(my_room),
            },
        };
        ToMAnswer::from_bool(yes)
    }
}

fn adjacency(doc: &BeliefDoc) -> BTreeMap<RoomId, Vec<RoomId>> {
    let mut adj: BTreeMap<RoomId, Vec<RoomId>> = BTreeMap::new();
    for (room, ns) in &doc.connectivity {
        for n in ns {
            adj.entry(*room).or_default().push(*n);
            adj.entry(*n).or_default().push(*room);
        }
        adj.entry(*room).or_default();
    }
    for ns in adj.values_mut() {
        ns.sort();
        ns.dedup();
    }
    adj
}

/// Distance and first step to every reachable room; lower room ids win ties.
fn bfs(
    adj: &BTreeMap<RoomId, Vec<RoomId>>,
    from: RoomId,
) -> BTreeMap<RoomId, (u32, Option<RoomId>)> {
    let mut out = BTreeMap::from([(from, (0, None))]);
    let mut queue = VecDeque::from([from]);
    while let Some(r) = queue.pop_front() {
        let (d, first) = out[&r];
        for n in adj.get(&r).into_iter().flatten() {
            if !out.contains_key(n) {
                out.insert(*n, (d + 1, first.or(Some(*n))));
                queue.push_back(*n);
            }
        }
    }
    out
}

/// Plain-language rendering of structured claims for the message text.
pub fn describe_claims(claims: &[Claim], palette: &Palette) -> String {
    let bombs = |ids: &[BombId]| {
        let names: Vec<String> = ids.iter().map(|b| b.to_string()).collect();
        join_list(&names, "and")
    };
    claims
        .iter()
        .map(|c| match c {
            Claim::RoomContents { room, bombs: ids } => match ids.len() {
                0 => format!("Room {room} has no bomb."),
                1 => format!("Room {room} has bomb {}.", ids[0]),
                _ => format!("Room {room} has bombs {}.", bombs(ids)),
            },
            Claim::BombLocation { bomb, room } => format!("Bomb {bomb} is in room {room}."),
            Claim::BombSequence { bomb, remaining } => {
                format!("Bomb {bomb} sequence: {}.", palette.sequence(remaining))
            }
            Claim::BombDefused { bomb, .. } => format!("Bomb {bomb} is defused."),
            Claim::PhaseCut {
                bomb,
                color,
                remaining,
                ..
            } => format!(
                "Cutting {} on bomb {bomb}, remaining: {}.",
                palette.name(*color),
                palette.sequence(remaining)
            ),
            Claim::IntentMove { room } => format!("Heading to room {room}."),
        })
        .collect::<Vec<_>>()
        .join(" ")
}
