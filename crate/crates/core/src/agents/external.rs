use std::io::{self, BufRead, BufReader, Read, Write};
use std::net::TcpStream;
use std::process::{Child, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::{Duration, Instant};

use thiserror::Error;

use super::memory::AgentReply;
use super::policy::{AnswerInput, Policy, ToMAnswer, TurnInput};
use super::wire::{decode_frame, FrameBody, WireFrame};
use crate::epistemic::{parse_yes_no, ToMQuestion};

pub const ENDPOINT_ENV: &str = "DEFUSE_AGENT_ENDPOINT";
pub const DEFAULT_TURN_TIMEOUT: Duration = Duration::from_secs(120);

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("no endpoint given and {ENDPOINT_ENV} is unset")]
    NoEndpoint,
    #[error("endpoint `{0}` must start with tcp:// or exec:")]
    BadEndpoint(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// A line-oriented duplex channel. A reader thread feeds incoming lines into a queue so
/// reads can time out.
pub struct LineChannel {
    writer: Box<dyn Write + Send>,
    lines: Receiver<io::Result<String>>,
    child: Option<Child>,
}

#[derive(Debug, Error)]
pub enum RecvError {
    #[error("timed out")]
    Timeout,
    #[error("peer closed the connection")]
    Closed,
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl LineChannel {
    fn spawn(
        reader: Box<dyn Read + Send>,
        writer: Box<dyn Write + Send>,
        child: Option<Child>,
    ) -> Self {
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(reader).lines() {
                let stop = line.is_err();
                if tx.send(line).is_err() || stop {
                    break;
                }
            }
        });
        LineChannel {
            writer,
            lines: rx,
            child,
        }
    }

    /// `tcp://host:port` or `exec:program arg...`, the command split with shell quoting rules.
    pub fn connect(endpoint: &str) -> Result<Self, AgentError> {
        if let Some(addr) = endpoint.strip_prefix("tcp://") {
            let stream = TcpStream::connect(addr)?;
            stream.set_nodelay(true)?;
            let reader = stream.try_clone()?;
            return Ok(Self::spawn(Box::new(reader), Box::new(stream), None));
        }
        if let Some(cmd) = endpoint.strip_prefix("exec:") {
            let words = shlex::split(cmd).unwrap_or_default();
            let (program, args) = words
                .split_first()
                .ok_or_else(|| AgentError::BadEndpoint(endpoint.into()))?;
            let mut child = Command::new(program)
                .args(args)
                .stdin(Stdio::piped())
                .stdout(Stdio::piped())
                .stderr(Stdio::inherit())
                .spawn()?;
            let stdin = child.stdin.take().expect("piped stdin");
            let stdout = child.stdout.take().expect("piped stdout");
            return Ok(Self::spawn(Box::new(stdout), Box::new(stdin), Some(child)));
        }
        Err(AgentError::BadEndpoint(endpoint.into()))
    }

    pub fn send(&mut self, frame: &WireFrame) -> io::Result<()> {
        // Anything still queued answers an earlier request that already timed out.
        while self.lines.try_recv().is_ok() {}
        self.writer.write_all(frame.encode().as_bytes())?;
        self.writer.write_all(b"\n")?;
        self.writer.flush()
    }

    pub fn recv(&mut self, timeout: Duration) -> Result<String, RecvError> {
        match self.lines.recv_timeout(timeout) {
            Ok(Ok(line)) => Ok(line),
            Ok(Err(e)) => Err(RecvError::Io(e)),
            Err(RecvTimeoutError::Timeout) => Err(RecvError::Timeout),
            Err(RecvTimeoutError::Disconnected) => Err(RecvError::Closed),
        }
    }
}

impl Drop for LineChannel {
    fn drop(&mut self) {
        if let Some(child) = &mut self.child {
            let _ = child.kill();
            let _ = child.wait();
        }
    }
}

enum Failure {
    /// The turn is lost but the agent may recover.
    Turn,
    /// The agent is gone; it forfeits every later turn.
    Fatal,
}

/// Bridges one agent to an out-of-process policy over the wire protocol.
pub struct ExternalPolicy {
    channel: Option<LineChannel>,
    call_sign: String,
    timeout: Duration,
}

impl ExternalPolicy {
    pub fn connect(endpoint: Option<&str>, call_sign: &str) -> Result<Self, AgentError> {
        let endpoint = match endpoint {
            Some(e) => e.to_string(),
            None => std::env::var(ENDPOINT_ENV).map_err(|_| AgentError::NoEndpoint)?,
        };
        Ok(ExternalPolicy {
            channel: Some(LineChannel::connect(&endpoint)?),
            call_sign: call_sign.to_string(),
            timeout: DEFAULT_TURN_TIMEOUT,
        })
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    pub fn is_alive(&self) -> bool {
        self.channel.is_some()
    }

    fn exchange(&mut self, frame: WireFrame, timeout: Duration) -> Result<FrameBody, Failure> {
        let channel = self.channel.as_mut().ok_or(Failure::Fatal)?;
        let result = channel
            .send(&frame)
            .map_err(|_| Failure::Fatal)
            .and_then(|_| match channel.recv(timeout) {
                Ok(line) => decode_frame(&line)
                    .map(|f| f.body)
                    .map_err(|_| Failure::Turn),
                Err(RecvError::Timeout) => Err(Failure::Turn),
                Err(_) => Err(Failure::Fatal),
            });
        if let Err(Failure::Fatal) = result {
            self.channel = None;
        }
        result
    }
}

impl Policy for ExternalPolicy {
    fn kind(&self) -> &'static str {
        "external"
    }

    fn act(&mut self, input: &TurnInput) -> AgentReply {
        let timeout = Duration::from_millis(input.deadline_ms).min(self.timeout);
        let frame = WireFrame::new(FrameBody::Turn {
            trial_id: input.trial_id.to_string(),
            round: input.observation.round,
            agent: self.call_sign.clone(),
            context: input.first_turn.then(|| input.memory.context.clone()),
            observation: input.observation.text.clone(),
            belief_seed: if input.first_turn {
                input.memory.belief_text.clone()
            } else {
                None
            },
            deadline_ms: timeout.as_millis() as u64,
        });
        let started = Instant::now();
        match self.exchange(frame, timeout) {
            Ok(FrameBody::Reply {
                raw_reply,
                belief_text,
            }) => AgentReply {
                belief_text,
                latency_ms: Some(started.elapsed().as_millis() as u64),
                ..AgentReply::text(raw_reply)
            },
            _ => AgentReply::unparseable(),
        }
    }

    fn answer(&mut self, q: &ToMQuestion, _input: &AnswerInput) -> ToMAnswer {
        let frame = WireFrame::new(FrameBody::TomQuery {
            question_id: q.id.clone(),
            question_text: q.text.clone(),
        });
        match self.exchange(frame, self.timeout) {
            Ok(FrameBody::TomAnswer {
                question_id,
                answer_text,
                yes_no,
            }) if question_id == q.id => ToMAnswer {
                yes: yes_no.unwrap_or_else(|| parse_yes_no(&answer_text)),
                text: answer_text,
            },
            _ => ToMAnswer::from_bool(false),
        }
    }

    fn finish(&mut self, trial_id: &str) {
        if let Some(channel) = self.channel.as_mut() {
            let _ = channel.send(&WireFrame::new(FrameBody::End {
                trial_id: trial_id.to_string(),
            }));
        }
        self.channel = None;
    }
}
