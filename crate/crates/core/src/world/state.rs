use std::collections::{BTreeMap, VecDeque};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::action::{Action, ActionOutcome, Effect, RuleError, Verdict};
use super::config::{ApplyMode, ConfigError, World, WorldConfig};
use super::ids::{AgentId, BombId, Color, RoomId};
use super::message::{Claim, Message};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BombState {
    Intact,
    PartiallyCut,
    Defused,
    Exploded,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bomb {
    pub id: BombId,
    pub location: RoomId,
    full_sequence: Vec<Color>,
    cut: usize,
    exploded: bool,
}

impl Bomb {
    pub fn full_sequence(&self) -> &[Color] {
        &self.full_sequence
    }

    /// Always a suffix of the full sequence.
    pub fn remaining(&self) -> &[Color] {
        &self.full_sequence[self.cut..]
    }

    pub fn phases_cut(&self) -> usize {
        self.cut
    }

    pub fn state(&self) -> BombState {
        if self.exploded {
            BombState::Exploded
        } else if self.cut == self.full_sequence.len() {
            BombState::Defused
        } else if self.cut > 0 {
            BombState::PartiallyCut
        } else {
            BombState::Intact
        }
    }

    pub fn is_live(&self) -> bool {
        matches!(self.state(), BombState::Intact | BombState::PartiallyCut)
    }

    pub fn points(&self) -> u32 {
        10 * self.full_sequence.len() as u32
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AgentState {
    pub call_sign: String,
    pub location: RoomId,
    /// Fixed for the whole trial, in configured order.
    pub tools: Vec<Color>,
    /// Remaining sequences this agent has inspected, advanced by its own later cuts.
    pub known_sequences: BTreeMap<BombId, Vec<Color>>,
}

impl AgentState {
    pub fn holds(&self, color: Color) -> bool {
        self.tools.contains(&color)
    }
}

/// One agent's contribution to a round.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Turn {
    pub agent: AgentId,
    pub action: Action,
    pub message: String,
    pub claims: Option<Vec<Claim>>,
}

impl Turn {
    pub fn silent(agent: AgentId, action: Action) -> Self {
        Self {
            agent,
            action,
            message: String::new(),
            claims: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundResult {
    pub round: u32,
    pub outcomes: Vec<ActionOutcome>,
    /// Messages sent this round; they are delivered in the next round's observations.
    pub sent: Vec<Message>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Running,
    AllDefused,
    TimeLimit,
    Deadlock,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WorldError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("unknown agent index {0}")]
    UnknownAgent(AgentId),
    #[error("round {round} expects agent {expected} at turn position {position}")]
    TurnOrder {
        round: u32,
        position: usize,
        expected: AgentId,
    },
    #[error("round {round} lists {got} turns for {expected} agents")]
    TurnCount {
        round: u32,
        got: usize,
        expected: usize,
    },
    #[error("the trial has already terminated ({0:?})")]
    Terminated(Termination),
}

type RoundFingerprint = Vec<(Action, String)>;

/// Full ground truth of a trial. Cloning is cheap enough for search: the static world is shared.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WorldState {
    world: Arc<World>,
    round: u32,
    score: u32,
    bombs: Vec<Bomb>,
    agents: Vec<AgentState>,
    inbox: Vec<Message>,
    history: VecDeque<RoundFingerprint>,
}

pub fn new_world(config: WorldConfig) -> Result<WorldState, WorldError> {
    Ok(WorldState::new(Arc::new(World::new(config)?)))
}

impl WorldState {
    pub fn new(world: Arc<World>) -> Self {
        let cfg = world.config();
        let bombs = cfg
            .bombs
            .iter()
            .map(|b| Bomb {
                id: b.id,
                location: b.location,
                full_sequence: b.sequence.clone(),
                cut: 0,
                exploded: false,
            })
            .collect();
        let agents = cfg
            .agents
            .iter()
            .map(|a| AgentState {
                call_sign: a.call_sign.clone(),
                location: a.start,
                tools: a.tools.clone(),
                known_sequences: BTreeMap::new(),
            })
            .collect();
        Self {
            world,
            round: 1,
            score: 0,
            bombs,
            agents,
            inbox: Vec::new(),
            history: VecDeque::new(),
        }
    }

    pub fn world(&self) -> &Arc<World> {
        &self.world
    }

    pub fn config(&self) -> &WorldConfig {
        self.world.config()
    }

    /// Current 1-based round.
    pub fn round(&self) -> u32 {
        self.round
    }

    pub fn rounds_played(&self) -> u32 {
        self.round - 1
    }

    pub fn score(&self) -> u32 {
        self.score
    }

    pub fn bombs(&self) -> &[Bomb] {
        &self.bombs
    }

    pub fn bomb(&self, id: BombId) -> Option<&Bomb> {
        self.bombs.iter().find(|b| b.id == id)
    }

    pub fn agents(&self) -> &[AgentState] {
        &self.agents
    }

    pub fn agent(&self, id: AgentId) -> Option<&AgentState> {
        self.agents.get(id.0)
    }

    pub fn agent_by_call_sign(&self, call_sign: &str) -> Option<AgentId> {
        self.agents
            .iter()
            .position(|a| a.call_sign.eq_ignore_ascii_case(call_sign))
            .map(AgentId)
    }

    /// Messages delivered at the start of this round.
    pub fn inbox(&self) -> &[Message] {
        &self.inbox
    }

    /// Live bombs in a room, by ascending id.
    pub fn live_bombs_in(&self, room: RoomId) -> impl Iterator<Item = &Bomb> {
        self.bombs
            .iter()
            .filter(move |b| b.location == room && b.is_live())
    }

    pub fn agents_in(&self, room: RoomId) -> impl Iterator<Item = AgentId> + '_ {
        self.agents
            .iter()
            .enumerate()
            .filter(move |(_, a)| a.location == room)
            .map(|(i, _)| AgentId(i))
    }

    fn expect_agent(&self, agent: AgentId) -> Result<&AgentState, WorldError> {
        self.agents
            .get(agent.0)
            .ok_or(WorldError::UnknownAgent(agent))
    }

    /// Actions that cannot produce a rule error for `agent` in this state.
    pub fn legal_actions(&self, agent: AgentId) -> Result<Vec<Action>, WorldError> {
        let me = self.expect_agent(agent)?;
        let mut out: Vec<Action> = self
            .world
            .neighbors(me.location)
            .iter()
            .map(|room| Action::Move { room: *room })
            .collect();
        let live: Vec<&Bomb> = self.live_bombs_in(me.location).collect();
        if !live.is_empty() {
            out.push(Action::Inspect);
        }
        let mut tools = me.tools.clone();
        tools.sort();
        for color in tools {
            let applicable = match self.config().apply_mode {
                ApplyMode::Guarded => live.iter().any(|b| b.remaining().first() == Some(&color)),
                ApplyMode::Explosive => !live.is_empty(),
            };
            if applicable {
                out.push(Action::Apply { color });
            }
        }
        Ok(out)
    }

    /// Pure form: returns the successor state and the verdict.
    pub fn apply_action(
        &self,
        agent: AgentId,
        action: &Action,
    ) -> Result<(WorldState, ActionOutcome), WorldError> {
        let mut next = self.clone();
        let outcome = next.apply_in_place(agent, action)?;
        Ok((next, outcome))
    }

    /// In-place form used by the trial loop, where observations interleave with actions.
    pub fn apply_in_place(
        &mut self,
        agent: AgentId,
        action: &Action,
    ) -> Result<ActionOutcome, WorldError> {
        let location = self.expect_agent(agent)?.location;
        let mut outcome = ActionOutcome {
            agent,
            round: self.round,
            action: action.clone(),
            verdict: Verdict::Ok,
            effects: Vec::new(),
            score_delta: 0,
        };
        let result = match action {
            Action::Move { room } => self.do_move(agent, location, *room),
            Action::Inspect => self.do_inspect(agent, location),
            Action::Apply { color } => self.do_apply(agent, location, *color),
            Action::Wait => Ok(Vec::new()),
            Action::Invalid { reason } => Err(RuleError::Unparseable { reason: *reason }),
        };
        match result {
            Ok(effects) => {
                outcome.score_delta = effects
                    .iter()
                    .map(|e| match e {
                        Effect::BombDefused { points, .. } => *points,
                        _ => 0,
                    })
                    .sum();
                self.score += outcome.score_delta;
                outcome.effects = effects;
            }
            Err(err) => outcome.verdict = Verdict::RuleError(err),
        }
        Ok(outcome)
    }

    fn do_move(
        &mut self,
        agent: AgentId,
        current: RoomId,
        target: RoomId,
    ) -> Result<Vec<Effect>, RuleError> {
        if !self.world.is_adjacent(current, target) {
            return Err(RuleError::NotAdjacent { target, current });
        }
        self.agents[agent.0].location = target;
        Ok(vec![Effect::MovedTo { room: target }])
    }

    fn do_inspect(&mut self, agent: AgentId, room: RoomId) -> Result<Vec<Effect>, RuleError> {
        let revealed: Vec<(BombId, Vec<Color>)> = self
            .live_bombs_in(room)
            .map(|b| (b.id, b.remaining().to_vec()))
            .collect();
        if revealed.is_empty() {
            return Err(RuleError::NoBombToInspect { room });
        }
        let known = &mut self.agents[agent.0].known_sequences;
        Ok(revealed
            .into_iter()
            .map(|(bomb, sequence)| {
                known.insert(bomb, sequence.clone());
                Effect::SequenceRevealed { bomb, sequence }
            })
            .collect())
    }

    fn do_apply(
        &mut self,
        agent: AgentId,
        room: RoomId,
        color: Color,
    ) -> Result<Vec<Effect>, RuleError> {
        if !self.agents[agent.0].holds(color) {
            return Err(RuleError::MissingTool { color });
        }
        let live: Vec<usize> = self
            .bombs
            .iter()
            .enumerate()
            .filter(|(_, b)| b.location == room && b.is_live())
            .map(|(i, _)| i)
            .collect();
        let Some(&first) = live.first() else {
            return Err(RuleError::NoBombToDefuse { room });
        };
        let matching = live
            .iter()
            .copied()
            .find(|&i| self.bombs[i].remaining().first() == Some(&color));

        let Some(idx) = matching else {
            let bomb = &mut self.bombs[first];
            return match self.world.config().apply_mode {
                ApplyMode::Guarded => Err(RuleError::WrongSequence {
                    bomb: bomb.id,
                    color,
                    remaining: bomb.remaining().to_vec(),
                }),
                ApplyMode::Explosive => {
                    bomb.exploded = true;
                    Ok(vec![Effect::BombExploded { bomb: bomb.id }])
                }
            };
        };

        let bomb = &mut self.bombs[idx];
        bomb.cut += 1;
        let id = bomb.id;
        let remaining = bomb.remaining().to_vec();
        let mut effects = vec![Effect::PhaseCut { bomb: id, color }];
        if remaining.is_empty() {
            effects.push(Effect::BombDefused {
                bomb: id,
                points: bomb.points(),
            });
        }
        if let Some(known) = self.agents[agent.0].known_sequences.get_mut(&id) {
            *known = remaining;
        }
        Ok(effects)
    }

    /// Buffers the round's messages for delivery, records the deadlock fingerprint and
    /// advances the round counter.
    pub fn close_round(&mut self, turns: &[Turn]) -> Vec<Message> {
        let sent: Vec<Message> = turns
            .iter()
            .map(|t| Message {
                sender: t.agent,
                sent_round: self.round,
                text: t.message.clone(),
                claims: t.claims.clone(),
            })
            .filter(|m| !m.is_empty())
            .collect();
        self.inbox = sent.clone();

        let window = self.config().deadlock_window as usize;
        if window > 0 {
            self.history.push_back(
                turns
                    .iter()
                    .map(|t| (t.action.clone(), t.message.clone()))
                    .collect(),
            );
            while self.history.len() > window {
                self.history.pop_front();
            }
        }
        self.round += 1;
        sent
    }

    /// Applies every turn in call-sign order against the evolving state, then closes the round.
    pub fn step_round(&self, turns: &[Turn]) -> Result<(WorldState, RoundResult), WorldError> {
        let status = self.check_termination();
        if status != Termination::Running {
            return Err(WorldError::Terminated(status));
        }
        if turns.len() != self.agents.len() {
            return Err(WorldError::TurnCount {
                round: self.round,
                got: turns.len(),
                expected: self.agents.len(),
            });
        }
        if let Some(position) = turns.iter().enumerate().position(|(i, t)| t.agent.0 != i) {
            return Err(WorldError::TurnOrder {
                round: self.round,
                position,
                expected: AgentId(position),
            });
        }
        let mut next = self.clone();
        let round = next.round;
        let mut outcomes = Vec::with_capacity(turns.len());
        for turn in turns {
            outcomes.push(next.apply_in_place(turn.agent, &turn.action)?);
        }
        let sent = next.close_round(turns);
        Ok((
            next,
            RoundResult {
                round,
                outcomes,
                sent,
            },
        ))
    }

    pub fn check_termination(&self) -> Termination {
        if self.bombs.iter().all(|b| !b.is_live()) {
            return Termination::AllDefused;
        }
        let window = self.config().deadlock_window as usize;
        if window > 0 && self.history.len() >= window {
            let first = &self.history[0];
            if self.history.iter().all(|h| h == first) {
                return Termination::Deadlock;
            }
        }
        if self.round > self.config().round_limit {
            return Termination::TimeLimit;
        }
        Termination::Running
    }

    /// 10 points per phase of every fully defused bomb.
    pub fn defused_points(&self) -> u32 {
        self.bombs
            .iter()
            .filter(|b| b.state() == BombState::Defused)
            .map(Bomb::points)
            .sum()
    }
}
