use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::memory::{AgentMemory, AgentReply};
use crate::epistemic::ToMQuestion;
use crate::planner::JointPlan;
use crate::textio::{canonical_reply, Observation};
use crate::world::{Action, ActionOutcome, AgentId, Palette};

pub struct TurnInput<'a> {
    pub trial_id: &'a str,
    pub observation: &'a Observation,
    /// This agent's outcome from its previous turn.
    pub last_outcome: Option<&'a ActionOutcome>,
    pub memory: &'a AgentMemory,
    pub palette: &'a Palette,
    /// Every move, inspect and apply phrase of the instance, legal or not.
    pub action_space: &'a [Action],
    pub first_turn: bool,
    pub deadline_ms: u64,
}

pub struct AnswerInput<'a> {
    pub trial_id: &'a str,
    pub observation: &'a Observation,
    pub outcome: &'a ActionOutcome,
    pub memory: &'a AgentMemory,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToMAnswer {
    pub text: String,
    pub yes: bool,
}

impl ToMAnswer {
    pub fn from_bool(yes: bool) -> Self {
        ToMAnswer {
            text: if yes { "Yes." } else { "No." }.to_string(),
            yes,
        }
    }
}

pub trait Policy: Send {
    fn kind(&self) -> &'static str;
    fn act(&mut self, input: &TurnInput) -> AgentReply;
    fn answer(&mut self, question: &ToMQuestion, input: &AnswerInput) -> ToMAnswer;
    /// Called once when the trial ends.
    fn finish(&mut self, _trial_id: &str) {}
}

/// Which policy an agent runs.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum PolicySpec {
    #[default]
    Greedy,
    /// Uniform over the legal actions.
    Random,
    /// Uniform over the whole action space, rule errors included.
    Uniform,
    /// Follows the centralized plan.
    Planner,
    Replay,
    External {
        endpoint: Option<String>,
    },
}

impl TryFrom<String> for PolicySpec {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<PolicySpec> for String {
    fn from(p: PolicySpec) -> String {
        p.to_string()
    }
}

impl fmt::Display for PolicySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolicySpec::Greedy => f.write_str("greedy"),
            PolicySpec::Random => f.write_str("random"),
            PolicySpec::Uniform => f.write_str("uniform"),
            PolicySpec::Planner => f.write_str("planner"),
            PolicySpec::Replay => f.write_str("replay"),
            PolicySpec::External { endpoint: None } => f.write_str("external"),
            PolicySpec::External { endpoint: Some(e) } => write!(f, "external:{e}"),
        }
    }
}

impl FromStr for PolicySpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.trim() {
            "greedy" => PolicySpec::Greedy,
            "random" => PolicySpec::Random,
            "uniform" => PolicySpec::Uniform,
            "planner" => PolicySpec::Planner,
            "replay" => PolicySpec::Replay,
            "external" => PolicySpec::External { endpoint: None },
            other => match other.strip_prefix("external:") {
                Some(e) if !e.is_empty() => PolicySpec::External {
                    endpoint: Some(e.to_string()),
                },
                _ => return Err(format!("unknown policy `{other}`")),
            },
        })
    }
}

/// Per-agent stream of the trial seed.
pub fn agent_rng(seed: u64, agent: AgentId) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(agent.0 as u64 + 1);
    rng
}

/// Picks uniformly among the legal actions; every reply is valid by construction.
pub struct RandomPolicy {
    rng: ChaCha8Rng,
}

impl RandomPolicy {
    pub fn new(seed: u64, agent: AgentId) -> Self {
        RandomPolicy {
            rng: agent_rng(seed, agent),
        }
    }
}

impl Policy for RandomPolicy {
    fn kind(&self) -> &'static str {
        "random"
    }

    fn act(&mut self, input: &TurnInput) -> AgentReply {
        match input.observation.legal_actions.choose(&mut self.rng) {
            Some(a) => AgentReply::text(canonical_reply(a, "", input.palette)),
            None => AgentReply::text(""),
        }
    }

    fn answer(&mut self, _q: &ToMQuestion, _input: &AnswerInput) -> ToMAnswer {
        ToMAnswer::from_bool(self.rng.gen_bool(0.5))
    }
}

/// Picks uniformly over the full action space.
pub struct UniformPolicy {
    rng: ChaCha8Rng,
}

impl UniformPolicy {
    pub fn new(seed: u64, agent: AgentId) -> Self {
        UniformPolicy {
            rng: agent_rng(seed, agent),
        }
    }
}

impl Policy for UniformPolicy {
    fn kind(&self) -> &'static str {
        "uniform"
    }

    fn act(&mut self, input: &TurnInput) -> AgentReply {
        match input.action_space.choose(&mut self.rng) {
            Some(a) => AgentReply::text(canonical_reply(a, "", input.palette)),
            None => AgentReply::text(""),
        }
    }

    fn answer(&mut self, _q: &ToMQuestion, _input: &AnswerInput) -> ToMAnswer {
        ToMAnswer::from_bool(self.rng.gen_bool(0.5))
    }
}

/// Re-emits recorded replies and answers in order.
pub struct ReplayPolicy {
    replies: VecDeque<AgentReply>,
    answers: VecDeque<ToMAnswer>,
}

impl ReplayPolicy {
    pub fn new(replies: Vec<AgentReply>, answers: Vec<ToMAnswer>) -> Self {
        ReplayPolicy {
            replies: replies.into(),
            answers: answers.into(),
        }
    }
}

impl Policy for ReplayPolicy {
    fn kind(&self) -> &'static str {
        "replay"
    }

    fn act(&mut self, _input: &TurnInput) -> AgentReply {
        self.replies
            .pop_front()
            .unwrap_or_else(|| AgentReply::text(""))
    }

    fn answer(&mut self, _q: &ToMQuestion, _input: &AnswerInput) -> ToMAnswer {
        self.answers
            .pop_front()
            .unwrap_or_else(|| ToMAnswer::from_bool(false))
    }
}

/// Plays one agent's column of a joint plan.
pub struct PlanPolicy {
    plan: Arc<JointPlan>,
    agent: AgentId,
}

impl PlanPolicy {
    pub fn new(plan: Arc<JointPlan>, agent: AgentId) -> Self {
        PlanPolicy { plan, agent }
    }
}

impl Policy for PlanPolicy {
    fn kind(&self) -> &'static str {
        "planner"
    }

    fn act(&mut self, input: &TurnInput) -> AgentReply {
        let round = input.observation.round;
        let action = self.plan.action(self.agent, round);
        // Distinct text per step keeps planned waiting from reading as a stalled team.
        let message = format!("Plan step {round}.");
        let raw = match action {
            Action::Wait => format!("Action selection: wait. Message to Team: \"{message}\""),
            _ => canonical_reply(&action, &message, input.palette),
        };
        AgentReply {
            action: Some(action),
            ..AgentReply::text(raw)
        }
    }

    fn answer(&mut self, _q: &ToMQuestion, _input: &AnswerInput) -> ToMAnswer {
        ToMAnswer::from_bool(false)
    }
}
