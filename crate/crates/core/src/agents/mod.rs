//! Turn-taking policies and the external-agent bridge.

mod external;
mod greedy;
mod memory;
mod policy;
mod wire;

pub use external::{
    AgentError, ExternalPolicy, LineChannel, RecvError, DEFAULT_TURN_TIMEOUT, ENDPOINT_ENV,
};
pub use greedy::{describe_claims, GreedyPolicy};
pub use memory::{
    estimate_tokens, AgentMemory, AgentReply, Exchange, DEFAULT_TOKEN_CAP, DEFAULT_WINDOW,
};
pub use policy::{
    agent_rng, AnswerInput, PlanPolicy, Policy, PolicySpec, RandomPolicy, ReplayPolicy, ToMAnswer,
    TurnInput, UniformPolicy,
};
pub use wire::{decode_frame, FrameBody, WireError, WireFrame, PROTOCOL_VERSION};
