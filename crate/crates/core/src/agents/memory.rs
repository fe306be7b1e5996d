use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::belief::BeliefDoc;
use crate::world::{Action, Claim, InvalidReason, Palette};

pub const DEFAULT_WINDOW: usize = 2;
pub const DEFAULT_TOKEN_CAP: usize = 4096;

/// Rough token count: one unit per four characters, rounded up.
pub fn estimate_tokens(text: &str) -> usize {
    text.chars().count().div_ceil(4)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exchange {
    pub round: u32,
    pub observation: String,
    pub reply: String,
}

/// What a policy remembers between turns.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentMemory {
    /// Rules prompt. Never evicted.
    pub context: String,
    pub window: usize,
    pub token_cap: usize,
    pub history: VecDeque<Exchange>,
    pub belief: Option<BeliefDoc>,
    /// Rendered form of `belief`, kept in sync by the trial loop.
    pub belief_text: Option<String>,
}

impl AgentMemory {
    pub fn new(context: String) -> Self {
        AgentMemory {
            context,
            window: DEFAULT_WINDOW,
            token_cap: DEFAULT_TOKEN_CAP,
            history: VecDeque::new(),
            belief: None,
            belief_text: None,
        }
    }

    pub fn with_window(mut self, window: usize) -> Self {
        self.window = window;
        self
    }

    pub fn set_belief(&mut self, doc: BeliefDoc, palette: &Palette) {
        self.belief_text = Some(doc.render(palette));
        self.belief = Some(doc);
    }

    fn raw_tokens(&self) -> usize {
        estimate_tokens(&self.context)
            + self.belief_text.as_deref().map_or(0, estimate_tokens)
            + self
                .history
                .iter()
                .map(|e| estimate_tokens(&e.observation) + estimate_tokens(&e.reply))
                .sum::<usize>()
    }

    /// Prompt size estimate, never above the cap.
    pub fn token_estimate(&self) -> usize {
        self.raw_tokens().min(self.token_cap)
    }

    /// Appends the round's pair, then evicts the oldest pairs beyond the window or over the
    /// token cap.
    pub fn window_update(&mut self, round: u32, observation: &str, reply: &str) {
        self.history.push_back(Exchange {
            round,
            observation: observation.to_string(),
            reply: reply.to_string(),
        });
        while self.history.len() > self.window {
            self.history.pop_front();
        }
        while self.raw_tokens() > self.token_cap && !self.history.is_empty() {
            self.history.pop_front();
        }
    }

    /// The full query text for a text-completion policy.
    pub fn prompt(&self, observation: &str) -> String {
        let mut out = self.context.clone();
        for e in &self.history {
            out.push_str("\n\n");
            out.push_str(&e.observation);
            out.push_str("\n\n");
            out.push_str(&e.reply);
        }
        if let Some(b) = &self.belief_text {
            out.push_str("\n\n");
            out.push_str(b);
        }
        out.push_str("\n\n");
        out.push_str(observation);
        out
    }
}

/// One turn's reply.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentReply {
    /// Logged verbatim before parsing.
    pub raw: String,
    /// Set by scripted policies that pick an action directly; otherwise `raw` is parsed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub action: Option<Action>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub claims: Option<Vec<Claim>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub belief_text: Option<String>,
    /// Wall-clock time of external calls. Kept out of transcripts.
    #[serde(skip)]
    pub latency_ms: Option<u64>,
}

impl AgentReply {
    pub fn text(raw: impl Into<String>) -> Self {
        AgentReply {
            raw: raw.into(),
            action: None,
            claims: None,
            belief_text: None,
            latency_ms: None,
        }
    }

    /// Substitute for a lost or garbled external reply.
    pub fn unparseable() -> Self {
        AgentReply {
            action: Some(Action::Invalid {
                reason: InvalidReason::Unparseable,
            }),
            ..AgentReply::text("")
        }
    }
}
