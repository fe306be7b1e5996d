use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::metrics::Metrics;
use super::trial::TrialConfig;
use crate::agents::AgentReply;
use crate::belief::BeliefDoc;
use crate::epistemic::ToMQuestion;
use crate::world::{ActionOutcome, AgentId, Claim, Termination, WorldConfig};

pub const TRANSCRIPT_FORMAT: &str = "defuse-transcript";
pub const TRANSCRIPT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptHeader {
    pub format: String,
    pub version: u32,
    pub trial_id: String,
    pub seed: u64,
    pub trial: TrialConfig,
    pub world: WorldConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum EventBody {
    Observation {
        text: String,
    },
    Belief {
        doc: BeliefDoc,
        text: String,
    },
    Reply {
        reply: AgentReply,
    },
    Outcome {
        outcome: ActionOutcome,
    },
    Message {
        text: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        claims: Option<Vec<Claim>>,
    },
    TomQuestion {
        question: ToMQuestion,
    },
    TomAnswer {
        question_id: String,
        text: String,
        yes: bool,
    },
    Termination {
        termination: Termination,
        metrics: Metrics,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptEvent {
    pub index: usize,
    pub round: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub agent: Option<AgentId>,
    #[serde(flatten)]
    pub body: EventBody,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub header: TranscriptHeader,
    pub events: Vec<TranscriptEvent>,
}

#[derive(Debug, Error)]
pub enum TranscriptError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("empty transcript")]
    Empty,
    #[error("not a transcript or unsupported version: {0}")]
    Header(String),
    #[error("line {line}: event index {got}, expected {expected}")]
    Index {
        line: usize,
        got: usize,
        expected: usize,
    },
}

impl Transcript {
    pub fn new(header: TranscriptHeader) -> Self {
        Transcript {
            header,
            events: Vec::new(),
        }
    }

    pub fn push(&mut self, round: u32, agent: Option<AgentId>, body: EventBody) {
        self.events.push(TranscriptEvent {
            index: self.events.len(),
            round,
            agent,
            body,
        });
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> io::Result<()> {
        serde_json::to_writer(&mut out, &self.header)?;
        out.write_all(b"\n")?;
        for e in &self.events {
            serde_json::to_writer(&mut out, e)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("JSON is UTF-8")
    }

    pub fn read_jsonl<R: BufRead>(input: R) -> Result<Self, TranscriptError> {
        let mut lines = input.lines();
        let first = lines.next().ok_or(TranscriptError::Empty)??;
        let header: TranscriptHeader =
            serde_json::from_str(&first).map_err(|e| TranscriptError::Header(e.to_string()))?;
        if header.format != TRANSCRIPT_FORMAT || header.version != TRANSCRIPT_VERSION {
            return Err(TranscriptError::Header(format!(
                "{} v{}",
                header.format, header.version
            )));
        }
        let mut t = Transcript::new(header);
        for (i, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let event = decode_event(&line).map_err(|message| TranscriptError::Parse {
                line: i + 2,
                message,
            })?;
            if event.index != t.events.len() {
                return Err(TranscriptError::Index {
                    line: i + 2,
                    got: event.index,
                    expected: t.events.len(),
                });
            }
            t.events.push(event);
        }
        Ok(t)
    }

    pub fn from_jsonl(text: &str) -> Result<Self, TranscriptError> {
        Self::read_jsonl(text.as_bytes())
    }

    pub fn replies(&self, agent: AgentId) -> Vec<AgentReply> {
        self.events
            .iter()
            .filter(|e| e.agent == Some(agent))
            .filter_map(|e| match &e.body {
                EventBody::Reply { reply } => Some(reply.clone()),
                _ => None,
            })
            .collect()
    }

    pub fn metrics(&self) -> Option<&Metrics> {
        self.events.iter().rev().find_map(|e| match &e.body {
            EventBody::Termination { metrics, .. } => Some(metrics),
            _ => None,
        })
    }
}

/// Decodes one event line.
pub fn decode_event(line: &str) -> Result<TranscriptEvent, String> {
    serde_json::from_str(line).map_err(|e| e.to_string())
}
