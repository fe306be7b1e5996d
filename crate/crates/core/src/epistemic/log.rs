use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::world::{ActionOutcome, AgentId, BombId, Claim, Effect, RoomId};

/// A fact agents can know. Contents and sequences can go stale; the others are events.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Proposition {
    /// Where an agent is. Common knowledge every round.
    Location {
        agent: AgentId,
    },
    /// The current set of live bombs in a room.
    RoomContents {
        room: RoomId,
    },
    /// The current remaining sequence of a bomb.
    BombSequence {
        bomb: BombId,
    },
    BombStateChanged {
        bomb: BombId,
        round: u32,
    },
    /// Some phase was cut during `round`.
    PhaseDefused {
        round: u32,
    },
}

/// `[a]` a knows P; `[a, b]` a knows b knows P; `[a, b, a]` a knows b knows a knows P.
pub type Chain = Vec<AgentId>;

pub const MAX_CHAIN: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    DirectObservation,
    CoLocation,
    Communication,
    Assumption,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Truth {
    Yes,
    No,
    Ambiguous,
}

/// How "current contents" questions treat knowledge that predates a later change.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StalePolicy {
    #[default]
    No,
    Yes,
    Ambiguous,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KnowledgeAtom {
    pub chain: Chain,
    pub proposition: Proposition,
    pub established_at: u32,
    pub channel: Channel,
    /// Event whose evidence the atom reflects; staleness is judged against it.
    pub as_of: usize,
    /// Event that produced the atom.
    pub event: usize,
    /// Index of the atom for `chain[1..]` granted by the same event.
    pub support: Option<usize>,
}

impl KnowledgeAtom {
    pub fn order(&self) -> usize {
        self.chain.len() - 1
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum EpistemicEvent {
    /// An agent sees its own room at the start of its turn.
    Observed {
        round: u32,
        agent: AgentId,
        room: RoomId,
        bombs: Vec<BombId>,
    },
    /// An action and who was in the actor's room when it happened.
    Acted {
        round: u32,
        room: RoomId,
        witnesses: Vec<AgentId>,
        outcome: ActionOutcome,
    },
    /// A broadcast at send time. Nothing is learned until delivery.
    Sent {
        round: u32,
        sender: AgentId,
        text: String,
        claims: Option<Vec<Claim>>,
    },
    /// Every undelivered message reaches every agent.
    Delivered { round: u32 },
}

impl EpistemicEvent {
    pub fn round(&self) -> u32 {
        match self {
            EpistemicEvent::Observed { round, .. }
            | EpistemicEvent::Acted { round, .. }
            | EpistemicEvent::Sent { round, .. }
            | EpistemicEvent::Delivered { round } => *round,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EpistemicError {
    #[error("event for round {got} arrived after round {last}")]
    OutOfOrder { got: u32, last: u32 },
    #[error("agent {0} is not part of this log")]
    UnknownAgent(AgentId),
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct ClaimRecord {
    sent: usize,
    sender: AgentId,
    delivered: Option<usize>,
    /// Propositions the sender knew at send time, with the evidence event.
    supported: Vec<(Proposition, usize)>,
    unsupported: Vec<Proposition>,
    free_text: bool,
    intent: Option<RoomId>,
    round: u32,
}

/// Append-only event history and the knowledge atoms derived from it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EpistemicLog {
    n_agents: usize,
    stale: StalePolicy,
    events: Vec<EpistemicEvent>,
    atoms: Vec<KnowledgeAtom>,
    index: BTreeMap<(Chain, Proposition), Vec<usize>>,
    room_changes: BTreeMap<RoomId, Vec<usize>>,
    sequence_changes: BTreeMap<BombId, Vec<usize>>,
    messages: Vec<ClaimRecord>,
}

impl EpistemicLog {
    pub fn new(n_agents: usize, stale: StalePolicy) -> Self {
        Self {
            n_agents,
            stale,
            events: Vec::new(),
            atoms: Vec::new(),
            index: BTreeMap::new(),
            room_changes: BTreeMap::new(),
            sequence_changes: BTreeMap::new(),
            messages: Vec::new(),
        }
    }

    /// Re-derives every atom from an event list.
    pub fn from_events(
        n_agents: usize,
        stale: StalePolicy,
        events: &[EpistemicEvent],
    ) -> Result<Self, EpistemicError> {
        let mut log = Self::new(n_agents, stale);
        for e in events {
            log.propagate(e.clone())?;
        }
        Ok(log)
    }

    pub fn events(&self) -> &[EpistemicEvent] {
        &self.events
    }

    pub fn atoms(&self) -> &[KnowledgeAtom] {
        &self.atoms
    }

    pub fn n_agents(&self) -> usize {
        self.n_agents
    }

    pub fn stale_policy(&self) -> StalePolicy {
        self.stale
    }

    fn agents(&self) -> Vec<AgentId> {
        (0..self.n_agents).map(AgentId).collect()
    }

    fn check_agent(&self, agent: AgentId) -> Result<(), EpistemicError> {
        if agent.0 < self.n_agents {
            Ok(())
        } else {
            Err(EpistemicError::UnknownAgent(agent))
        }
    }

    pub fn propagate(&mut self, event: EpistemicEvent) -> Result<(), EpistemicError> {
        if let Some(last) = self.events.last() {
            if event.round() < last.round() {
                return Err(EpistemicError::OutOfOrder {
                    got: event.round(),
                    last: last.round(),
                });
            }
        }
        match &event {
            EpistemicEvent::Observed { agent, .. } => self.check_agent(*agent)?,
            EpistemicEvent::Acted {
                outcome, witnesses, ..
            } => {
                self.check_agent(outcome.agent)?;
                for w in witnesses {
                    self.check_agent(*w)?;
                }
            }
            EpistemicEvent::Sent { sender, .. } => self.check_agent(*sender)?,
            EpistemicEvent::Delivered { .. } => {}
        }
        let idx = self.events.len();
        self.events.push(event.clone());
        let all = self.agents();
        match event {
            EpistemicEvent::Observed {
                round, agent, room, ..
            } => {
                self.grant(
                    &[agent],
                    &all,
                    Proposition::RoomContents { room },
                    round,
                    idx,
                    idx,
                    Channel::DirectObservation,
                    Channel::Assumption,
                );
            }
            EpistemicEvent::Acted {
                round,
                room,
                witnesses,
                outcome,
            } => self.derive_action(idx, round, room, &witnesses, &outcome),
            EpistemicEvent::Sent {
                round,
                sender,
                claims,
                ..
            } => self.record_message(idx, round, sender, claims.as_deref()),
            EpistemicEvent::Delivered { round } => {
                let pending: Vec<usize> = (0..self.messages.len())
                    .filter(|i| self.messages[*i].delivered.is_none())
                    .collect();
                for m in pending {
                    self.messages[m].delivered = Some(idx);
                    let supported = self.messages[m].supported.clone();
                    for (prop, as_of) in supported {
                        self.grant(
                            &all,
                            &all,
                            prop,
                            round,
                            idx,
                            as_of,
                            Channel::Communication,
                            Channel::Communication,
                        );
                    }
                }
            }
        }
        Ok(())
    }

    fn derive_action(
        &mut self,
        idx: usize,
        round: u32,
        room: RoomId,
        witnesses: &[AgentId],
        outcome: &ActionOutcome,
    ) {
        let actor = outcome.agent;
        let all = self.agents();
        let mut present: Vec<AgentId> = vec![actor];
        present.extend(witnesses.iter().copied().filter(|w| *w != actor));
        present.sort();
        present.dedup();

        let defused: Vec<BombId> = outcome
            .effects
            .iter()
            .filter_map(|e| match e {
                Effect::BombDefused { bomb, .. } | Effect::BombExploded { bomb } => Some(*bomb),
                _ => None,
            })
            .collect();
        for effect in &outcome.effects {
            match effect {
                Effect::MovedTo { room: to } => self.grant(
                    &[actor],
                    &all,
                    Proposition::RoomContents { room: *to },
                    round,
                    idx,
                    idx,
                    Channel::DirectObservation,
                    Channel::Assumption,
                ),
                Effect::SequenceRevealed { bomb, .. } => self.grant(
                    &[actor],
                    &[actor],
                    Proposition::BombSequence { bomb: *bomb },
                    round,
                    idx,
                    idx,
                    Channel::DirectObservation,
                    Channel::DirectObservation,
                ),
                Effect::PhaseCut { bomb, .. } => {
                    let knew =
                        self.holds_fresh(&[actor], &Proposition::BombSequence { bomb: *bomb }, idx);
                    self.sequence_changes.entry(*bomb).or_default().push(idx);
                    let public = defused.contains(bomb);
                    let (learners, audience): (&[AgentId], &[AgentId]) = if public {
                        (&present, &present)
                    } else {
                        (&[actor], &[actor])
                    };
                    let (learners, audience) = (learners.to_vec(), audience.to_vec());
                    for prop in [
                        Proposition::BombStateChanged { bomb: *bomb, round },
                        Proposition::PhaseDefused { round },
                    ] {
                        self.grant(
                            &learners,
                            &audience,
                            prop,
                            round,
                            idx,
                            idx,
                            Channel::DirectObservation,
                            Channel::CoLocation,
                        );
                    }
                    if knew {
                        self.grant(
                            &[actor],
                            &[actor],
                            Proposition::BombSequence { bomb: *bomb },
                            round,
                            idx,
                            idx,
                            Channel::DirectObservation,
                            Channel::DirectObservation,
                        );
                    }
                }
                Effect::BombDefused { .. } => {}
                Effect::BombExploded { bomb } => {
                    self.sequence_changes.entry(*bomb).or_default().push(idx);
                    self.grant(
                        &present,
                        &present,
                        Proposition::BombStateChanged { bomb: *bomb, round },
                        round,
                        idx,
                        idx,
                        Channel::DirectObservation,
                        Channel::CoLocation,
                    );
                }
            }
        }
        if !defused.is_empty() {
            self.room_changes.entry(room).or_default().push(idx);
            self.grant(
                &present,
                &present,
                Proposition::RoomContents { room },
                round,
                idx,
                idx,
                Channel::DirectObservation,
                Channel::CoLocation,
            );
        }
    }

    fn record_message(
        &mut self,
        idx: usize,
        round: u32,
        sender: AgentId,
        claims: Option<&[Claim]>,
    ) {
        let mut record = ClaimRecord {
            sent: idx,
            sender,
            delivered: None,
            supported: Vec::new(),
            unsupported: Vec::new(),
            free_text: claims.is_none(),
            intent: None,
            round,
        };
        for claim in claims.unwrap_or_default() {
            let props: Vec<Proposition> = match claim {
                Claim::RoomContents { room, .. } => vec![Proposition::RoomContents { room: *room }],
                Claim::BombSequence { bomb, .. } => vec![Proposition::BombSequence { bomb: *bomb }],
                Claim::BombDefused { bomb, round } => vec![
                    Proposition::BombStateChanged {
                        bomb: *bomb,
                        round: *round,
                    },
                    Proposition::PhaseDefused { round: *round },
                ],
                Claim::PhaseCut { bomb, round, .. } => vec![
                    Proposition::BombStateChanged {
                        bomb: *bomb,
                        round: *round,
                    },
                    Proposition::PhaseDefused { round: *round },
                    Proposition::BombSequence { bomb: *bomb },
                ],
                Claim::BombLocation { .. } => Vec::new(),
                Claim::IntentMove { room } => {
                    record.intent = Some(*room);
                    Vec::new()
                }
            };
            for prop in props {
                match self.fresh_as_of(&[sender], &prop, idx) {
                    Some(as_of) => {
                        if !record.supported.iter().any(|(p, _)| *p == prop) {
                            record.supported.push((prop, as_of));
                        }
                    }
                    None => {
                        // a phase-cut claim also carries the sequence, which the sender may not know
                        let optional = matches!(claim, Claim::PhaseCut { .. })
                            && matches!(prop, Proposition::BombSequence { .. });
                        if !optional && !record.unsupported.contains(&prop) {
                            record.unsupported.push(prop);
                        }
                    }
                }
            }
        }
        self.messages.push(record);
    }

    /// Grants `prop` to every chain over `audience` (length ≤ 3, no agent twice in a row)
    /// whose innermost agent is a learner.
    #[allow(clippy::too_many_arguments)]
    fn grant(
        &mut self,
        learners: &[AgentId],
        audience: &[AgentId],
        prop: Proposition,
        round: u32,
        event: usize,
        as_of: usize,
        base: Channel,
        lifted: Channel,
    ) {
        let mut frontier: Vec<(Chain, Option<usize>)> = Vec::new();
        for l in learners {
            let id = self.push_atom(vec![*l], &prop, round, event, as_of, base, None);
            frontier.push((vec![*l], Some(id)));
        }
        for _ in 1..MAX_CHAIN {
            let mut next = Vec::new();
            for (chain, support) in &frontier {
                for a in audience {
                    if *a == chain[0] {
                        continue;
                    }
                    let mut c = Vec::with_capacity(chain.len() + 1);
                    c.push(*a);
                    c.extend_from_slice(chain);
                    let id =
                        self.push_atom(c.clone(), &prop, round, event, as_of, lifted, *support);
                    next.push((c, Some(id)));
                }
            }
            frontier = next;
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn push_atom(
        &mut self,
        chain: Chain,
        prop: &Proposition,
        round: u32,
        event: usize,
        as_of: usize,
        channel: Channel,
        support: Option<usize>,
    ) -> usize {
        let id = self.atoms.len();
        self.index
            .entry((chain.clone(), prop.clone()))
            .or_default()
            .push(id);
        self.atoms.push(KnowledgeAtom {
            chain,
            proposition: prop.clone(),
            established_at: round,
            channel,
            as_of,
            event,
            support,
        });
        id
    }

    fn last_change(&self, prop: &Proposition, upto: usize) -> Option<usize> {
        let changes = match prop {
            Proposition::RoomContents { room } => self.room_changes.get(room),
            Proposition::BombSequence { bomb } => self.sequence_changes.get(bomb),
            _ => None,
        }?;
        changes.iter().copied().filter(|c| *c < upto).max()
    }

    /// Latest evidence event among atoms for (chain, prop) produced before `upto`.
    fn best_as_of(&self, chain: &[AgentId], prop: &Proposition, upto: usize) -> Option<usize> {
        self.index
            .get(&(chain.to_vec(), prop.clone()))?
            .iter()
            .map(|i| &self.atoms[*i])
            .filter(|a| a.event < upto)
            .map(|a| a.as_of)
            .max()
    }

    fn fresh_as_of(&self, chain: &[AgentId], prop: &Proposition, upto: usize) -> Option<usize> {
        if matches!(prop, Proposition::Location { .. }) {
            return Some(upto);
        }
        let best = self.best_as_of(chain, prop, upto)?;
        match self.last_change(prop, upto) {
            Some(change) if best < change => None,
            _ => Some(best),
        }
    }

    fn holds_fresh(&self, chain: &[AgentId], prop: &Proposition, upto: usize) -> bool {
        self.fresh_as_of(chain, prop, upto).is_some()
    }

    /// Ground truth over the whole log.
    pub fn query(&self, chain: &[AgentId], prop: &Proposition) -> Truth {
        self.query_upto(chain, prop, self.events.len())
    }

    /// Ground truth at the end of `round` (every event with round ≤ `round`).
    pub fn query_at_round(&self, chain: &[AgentId], prop: &Proposition, round: u32) -> Truth {
        let upto = self.events.partition_point(|e| e.round() <= round);
        self.query_upto(chain, prop, upto)
    }

    /// Ground truth considering only the first `upto` events.
    pub fn query_upto(&self, chain: &[AgentId], prop: &Proposition, upto: usize) -> Truth {
        if chain.is_empty()
            || chain.len() > MAX_CHAIN
            || chain.iter().any(|a| a.0 >= self.n_agents)
            || chain.windows(2).any(|w| w[0] == w[1])
        {
            return Truth::No;
        }
        let upto = upto.min(self.events.len());
        if matches!(prop, Proposition::Location { .. }) {
            return Truth::Yes;
        }
        if let Some(best) = self.best_as_of(chain, prop, upto) {
            match self.last_change(prop, upto) {
                Some(change) if best < change => match self.stale {
                    StalePolicy::Yes => return Truth::Yes,
                    StalePolicy::Ambiguous => return Truth::Ambiguous,
                    StalePolicy::No => {}
                },
                _ => return Truth::Yes,
            }
        }
        if self.overlay_ambiguous(chain, prop, upto) {
            return Truth::Ambiguous;
        }
        Truth::No
    }

    fn overlay_ambiguous(&self, chain: &[AgentId], prop: &Proposition, upto: usize) -> bool {
        for m in self.messages.iter().filter(|m| m.sent < upto) {
            let only_sender = chain == [m.sender];
            if let (Some(room), Proposition::RoomContents { room: asked }) = (m.intent, prop) {
                if room == *asked
                    && chain.len() >= 2
                    && chain.last() == Some(&m.sender)
                    && self.intent_failed(m, upto)
                {
                    return true;
                }
            }
            let delivered = m.delivered.is_some_and(|d| d < upto);
            if !delivered || only_sender {
                continue;
            }
            if m.unsupported.contains(prop) {
                return true;
            }
            if m.free_text && self.holds_fresh(&[m.sender], prop, m.sent) {
                return true;
            }
        }
        false
    }

    fn intent_failed(&self, m: &ClaimRecord, upto: usize) -> bool {
        let Some(room) = m.intent else {
            return false;
        };
        self.events[..upto].iter().any(|e| match e {
            EpistemicEvent::Acted { round, outcome, .. } => {
                *round == m.round
                    && outcome.agent == m.sender
                    && !outcome.effects.contains(&Effect::MovedTo { room })
            }
            _ => false,
        })
    }
}
