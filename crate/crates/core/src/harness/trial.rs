use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::generate::{generate_instance, GenError, RandomizationSpec};
use super::metrics::Metrics;
use super::transcript::{
    EventBody, Transcript, TranscriptHeader, TRANSCRIPT_FORMAT, TRANSCRIPT_VERSION,
};
use crate::agents::{
    AgentError, AgentMemory, AnswerInput, ExternalPolicy, GreedyPolicy, PlanPolicy, Policy,
    PolicySpec, RandomPolicy, ReplayPolicy, ToMAnswer, TurnInput, UniformPolicy, DEFAULT_WINDOW,
};
use crate::belief::{
    initial_belief, parse_belief, reference_update, score_belief, BeliefDoc, BeliefScore,
    DEFAULT_OBSERVATION_CAP,
};
use crate::epistemic::{
    generate_questions, EpistemicError, EpistemicEvent, EpistemicLog, StalePolicy, ToMReport,
};
use crate::planner::{plan_mission, PlannerError, PlannerOptions};
use crate::textio::{parse_reply_with, render_context, render_observation, TemplateSet};
use crate::world::{
    Action, ActionOutcome, AgentId, ApplyMode, ConfigError, Termination, Turn, World, WorldConfig,
    WorldState,
};

pub const DEFAULT_TURN_TIMEOUT_MS: u64 = 120_000;

/// Everything that defines one trial. With the same config and seed a trial is reproducible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrialConfig {
    /// Fixed map; when absent the map is generated from `randomize` and `seed`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub world: Option<WorldConfig>,
    pub randomize: RandomizationSpec,
    /// Policy per lowercase call sign.
    pub policies: BTreeMap<String, PolicySpec>,
    /// Policy for agents missing from `policies`.
    pub default_policy: PolicySpec,
    pub belief: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub apply_mode: Option<ApplyMode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub round_limit: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub deadlock_window: Option<u32>,
    /// Probability that each generated ToM question is posed.
    pub tom_rate: f64,
    pub seed: u64,
    /// Past exchanges kept in each agent's prompt.
    pub window: usize,
    pub observation_cap: usize,
    pub stale_policy: StalePolicy,
    pub planner: PlannerOptions,
    pub turn_timeout_ms: u64,
}

impl Default for TrialConfig {
    fn default() -> Self {
        TrialConfig {
            world: None,
            randomize: RandomizationSpec::default(),
            policies: BTreeMap::new(),
            default_policy: PolicySpec::Greedy,
            belief: false,
            apply_mode: None,
            round_limit: None,
            deadlock_window: None,
            tom_rate: 1.0,
            seed: 0,
            window: DEFAULT_WINDOW,
            observation_cap: DEFAULT_OBSERVATION_CAP,
            stale_policy: StalePolicy::default(),
            planner: PlannerOptions::default(),
            turn_timeout_ms: DEFAULT_TURN_TIMEOUT_MS,
        }
    }
}

impl TrialConfig {
    pub fn with_seed(&self, seed: u64) -> Self {
        TrialConfig {
            seed,
            ..self.clone()
        }
    }

    /// Every agent runs `policy`.
    pub fn all(mut self, policy: PolicySpec) -> Self {
        self.policies.clear();
        self.default_policy = policy;
        self
    }

    pub fn trial_id(&self) -> String {
        format!("trial-{}", self.seed)
    }

    /// The map this trial plays, overrides applied.
    pub fn resolve_world(&self) -> Result<WorldConfig, HarnessError> {
        let mut world = match &self.world {
            Some(w) => w.clone(),
            None => generate_instance(&self.randomize, self.seed)?,
        };
        if let Some(mode) = self.apply_mode {
            world.apply_mode = mode;
        }
        if let Some(limit) = self.round_limit {
            world.round_limit = limit;
        }
        if let Some(window) = self.deadlock_window {
            world.deadlock_window = window;
        }
        Ok(world)
    }

    pub fn policy_for(&self, call_sign: &str) -> &PolicySpec {
        self.policies
            .get(&call_sign.to_lowercase())
            .unwrap_or(&self.default_policy)
    }
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Generate(#[from] GenError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("no agent has call sign `{0}`")]
    UnknownCallSign(String),
    #[error("{call_sign}: {source}")]
    Agent {
        call_sign: String,
        source: AgentError,
    },
    #[error("planner: {0}")]
    Planner(#[from] PlannerError),
    #[error("the replay policy needs a recorded transcript")]
    ReplayWithoutTranscript,
    #[error("tom_rate {0} is outside [0, 1]")]
    TomRate(f64),
    /// The engine refused to continue; the transcript holds everything up to the failure.
    #[error("engine error in round {round}: {detail}")]
    Engine {
        round: u32,
        detail: String,
        transcript: Box<Transcript>,
    },
}

#[derive(Debug, Clone)]
pub struct TrialOutput {
    pub transcript: Transcript,
    pub metrics: Metrics,
    pub final_state: WorldState,
    pub epistemic: EpistemicLog,
    /// Each agent's belief document after the closing debrief, when beliefs are on.
    pub beliefs: Vec<BeliefDoc>,
}

/// Plays one trial with the policies named in `config`.
pub fn run_trial(config: &TrialConfig) -> Result<TrialOutput, HarnessError> {
    let world = config.resolve_world()?;
    let policies = build_policies(config, &world, None)?;
    run_with_policies(config, world, policies)
}

/// Re-plays a recorded transcript: every agent re-emits its recorded replies and answers.
pub fn replay_transcript(recorded: &Transcript) -> Result<TrialOutput, HarnessError> {
    let config = recorded.header.trial.clone();
    let world = recorded.header.world.clone();
    let policies = build_policies(&config, &world, Some(recorded))?;
    run_with_policies(&config, world, policies)
}

fn recorded_answers(t: &Transcript, agent: AgentId) -> Vec<ToMAnswer> {
    t.events
        .iter()
        .filter(|e| e.agent == Some(agent))
        .filter_map(|e| match &e.body {
            EventBody::TomAnswer { text, yes, .. } => Some(ToMAnswer {
                text: text.clone(),
                yes: *yes,
            }),
            _ => None,
        })
        .collect()
}

fn build_policies(
    config: &TrialConfig,
    world: &WorldConfig,
    recorded: Option<&Transcript>,
) -> Result<Vec<Box<dyn Policy>>, HarnessError> {
    for key in config.policies.keys() {
        if !world
            .agents
            .iter()
            .any(|a| a.call_sign.eq_ignore_ascii_case(key))
        {
            return Err(HarnessError::UnknownCallSign(key.clone()));
        }
    }
    let n = world.agents.len();
    if let Some(t) = recorded {
        return Ok((0..n)
            .map(|i| {
                let a = AgentId(i);
                Box::new(ReplayPolicy::new(t.replies(a), recorded_answers(t, a))) as Box<dyn Policy>
            })
            .collect());
    }
    let needs_plan = world
        .agents
        .iter()
        .any(|a| *config.policy_for(&a.call_sign) == PolicySpec::Planner);
    let plan = if needs_plan {
        let w = World::new(world.clone())?;
        Some(Arc::new(plan_mission(&w, &config.planner)?.plan))
    } else {
        None
    };
    let start = WorldState::new(Arc::new(World::new(world.clone())?));
    let mut out: Vec<Box<dyn Policy>> = Vec::with_capacity(n);
    for (i, spec) in world.agents.iter().enumerate() {
        let me = AgentId(i);
        let policy: Box<dyn Policy> = match config.policy_for(&spec.call_sign) {
            PolicySpec::Greedy => {
                let doc = initial_belief(&start, me).expect("agent exists");
                Box::new(GreedyPolicy::new(me, n, doc))
            }
            PolicySpec::Random => Box::new(RandomPolicy::new(config.seed, me)),
            PolicySpec::Uniform => Box::new(UniformPolicy::new(config.seed, me)),
            PolicySpec::Planner => Box::new(PlanPolicy::new(
                plan.clone()
                    .expect("plan computed when a planner agent exists"),
                me,
            )),
            PolicySpec::Replay => return Err(HarnessError::ReplayWithoutTranscript),
            PolicySpec::External { endpoint } => Box::new(
                ExternalPolicy::connect(endpoint.as_deref(), &spec.call_sign)
                    .map_err(|source| HarnessError::Agent {
                        call_sign: spec.call_sign.clone(),
                        source,
                    })?
                    .with_timeout(Duration::from_millis(config.turn_timeout_ms)),
            ),
        };
        out.push(policy);
    }
    Ok(out)
}

struct Run<'a> {
    config: &'a TrialConfig,
    state: WorldState,
    transcript: Transcript,
    log: EpistemicLog,
    tom_rng: ChaCha8Rng,
    tom: ToMReport,
    replies: usize,
    valid: usize,
}

impl Run<'_> {
    fn engine_error(self, detail: String) -> HarnessError {
        HarnessError::Engine {
            round: self.state.round(),
            detail,
            transcript: Box::new(self.transcript),
        }
    }

    fn propagate(&mut self, event: EpistemicEvent) -> Result<(), EpistemicError> {
        self.log.propagate(event)
    }

    fn sample_question(&mut self) -> bool {
        let rate = self.config.tom_rate;
        if rate >= 1.0 {
            true
        } else {
            self.tom_rng.gen_bool(rate)
        }
    }
}

fn run_with_policies(
    config: &TrialConfig,
    world_config: WorldConfig,
    mut policies: Vec<Box<dyn Policy>>,
) -> Result<TrialOutput, HarnessError> {
    if !(0.0..=1.0).contains(&config.tom_rate) {
        return Err(HarnessError::TomRate(config.tom_rate));
    }
    let trial_id = config.trial_id();
    let world = Arc::new(World::new(world_config.clone())?);
    let palette = world.palette().clone();
    let n = world.agent_count();
    let call_signs: Vec<String> = world_config
        .agents
        .iter()
        .map(|a| a.call_sign.clone())
        .collect();
    let action_space = Action::space(&world);
    let templates = TemplateSet::builtin();

    let header = TranscriptHeader {
        format: TRANSCRIPT_FORMAT.to_string(),
        version: TRANSCRIPT_VERSION,
        trial_id: trial_id.clone(),
        seed: config.seed,
        trial: config.clone(),
        world: world_config,
    };
    let mut tom_rng = ChaCha8Rng::seed_from_u64(config.seed);
    tom_rng.set_stream(0);
    let mut run = Run {
        config,
        state: WorldState::new(world.clone()),
        transcript: Transcript::new(header),
        log: EpistemicLog::new(n, config.stale_policy),
        tom_rng,
        tom: ToMReport::default(),
        replies: 0,
        valid: 0,
    };

    let mut memories: Vec<AgentMemory> = (0..n)
        .map(|i| AgentMemory::new(render_context(&world, AgentId(i))).with_window(config.window))
        .collect();
    let mut beliefs: Vec<Option<BeliefDoc>> = (0..n)
        .map(|i| {
            config
                .belief
                .then(|| initial_belief(&run.state, AgentId(i)))
                .flatten()
        })
        .collect();
    let mut last_outcomes: Vec<Option<ActionOutcome>> = vec![None; n];

    let termination = loop {
        let status = run.state.check_termination();
        if status != Termination::Running {
            break status;
        }
        let round = run.state.round();
        if round > 1 {
            if let Err(e) = run.propagate(EpistemicEvent::Delivered { round }) {
                return Err(run.engine_error(e.to_string()));
            }
        }
        let inbound = run.state.inbox().to_vec();
        let mut turns: Vec<Turn> = Vec::with_capacity(n);
        for i in 0..n {
            let me = AgentId(i);
            let Some(obs) = render_observation(&run.state, me, last_outcomes[i].as_ref(), &inbound)
            else {
                return Err(run.engine_error(format!("agent {me} vanished")));
            };
            let room = obs.room;
            let seen: Vec<_> = obs.room_bombs.iter().map(|(b, _)| *b).collect();
            if let Err(e) = run.propagate(EpistemicEvent::Observed {
                round,
                agent: me,
                room,
                bombs: seen,
            }) {
                return Err(run.engine_error(e.to_string()));
            }
            run.transcript.push(
                round,
                Some(me),
                EventBody::Observation {
                    text: obs.text.clone(),
                },
            );

            if let Some(doc) = &beliefs[i] {
                let updated = reference_update(
                    doc,
                    &obs,
                    last_outcomes[i].as_ref(),
                    &obs.messages,
                    config.observation_cap,
                );
                memories[i].set_belief(updated.clone(), &palette);
                run.transcript.push(
                    round,
                    Some(me),
                    EventBody::Belief {
                        text: updated.render(&palette),
                        doc: updated.clone(),
                    },
                );
                beliefs[i] = Some(updated);
            }

            let reply = policies[i].act(&TurnInput {
                trial_id: &trial_id,
                observation: &obs,
                last_outcome: last_outcomes[i].as_ref(),
                memory: &memories[i],
                palette: &palette,
                action_space: &action_space,
                first_turn: round == 1,
                deadline_ms: config.turn_timeout_ms,
            });
            run.transcript.push(
                round,
                Some(me),
                EventBody::Reply {
                    reply: reply.clone(),
                },
            );
            if let (Some(text), Some(_)) = (&reply.belief_text, &beliefs[i]) {
                beliefs[i] = Some(parse_belief(text, &palette).doc);
            }

            let parsed = parse_reply_with(&reply.raw, &palette);
            let action = reply.action.clone().unwrap_or(parsed.action);
            let witnesses: Vec<AgentId> = run.state.agents_in(room).filter(|a| *a != me).collect();
            let outcome = match run.state.apply_in_place(me, &action) {
                Ok(o) => o,
                Err(e) => return Err(run.engine_error(e.to_string())),
            };
            run.replies += 1;
            if !action.is_invalid() && outcome.is_ok() {
                run.valid += 1;
            }
            run.transcript.push(
                round,
                Some(me),
                EventBody::Outcome {
                    outcome: outcome.clone(),
                },
            );
            if let Err(e) = run.propagate(EpistemicEvent::Acted {
                round,
                room,
                witnesses,
                outcome: outcome.clone(),
            }) {
                return Err(run.engine_error(e.to_string()));
            }

            let turn = Turn {
                agent: me,
                action,
                message: parsed.message,
                claims: reply.claims.clone(),
            };
            if !turn.message.trim().is_empty()
                || turn.claims.as_ref().is_some_and(|c| !c.is_empty())
            {
                run.transcript.push(
                    round,
                    Some(me),
                    EventBody::Message {
                        text: turn.message.clone(),
                        claims: turn.claims.clone(),
                    },
                );
                if let Err(e) = run.propagate(EpistemicEvent::Sent {
                    round,
                    sender: me,
                    text: turn.message.clone(),
                    claims: turn.claims.clone(),
                }) {
                    return Err(run.engine_error(e.to_string()));
                }
            }

            for q in generate_questions(&run.log, &call_signs, &outcome, templates) {
                if !run.sample_question() {
                    continue;
                }
                let answer = policies[i].answer(
                    &q,
                    &AnswerInput {
                        trial_id: &trial_id,
                        observation: &obs,
                        outcome: &outcome,
                        memory: &memories[i],
                    },
                );
                run.tom.record(q.level, q.truth, answer.yes);
                let question_id = q.id.clone();
                run.transcript
                    .push(round, Some(me), EventBody::TomQuestion { question: q });
                run.transcript.push(
                    round,
                    Some(me),
                    EventBody::TomAnswer {
                        question_id,
                        text: answer.text,
                        yes: answer.yes,
                    },
                );
            }

            memories[i].window_update(round, &obs.text, &reply.raw);
            last_outcomes[i] = Some(outcome);
            turns.push(turn);
        }
        run.state.close_round(&turns);
    };

    // Closing debrief: the last round's messages arrive and each agent updates once more.
    let final_round = run.state.round();
    let mut belief_score: Option<BeliefScore> = None;
    let mut final_beliefs = Vec::new();
    if config.belief {
        if let Err(e) = run.propagate(EpistemicEvent::Delivered { round: final_round }) {
            return Err(run.engine_error(e.to_string()));
        }
        let inbound = run.state.inbox().to_vec();
        let mut total = BeliefScore::default();
        for (i, doc) in beliefs.iter().enumerate() {
            let Some(doc) = doc else { continue };
            let Some(obs) =
                render_observation(&run.state, AgentId(i), last_outcomes[i].as_ref(), &inbound)
            else {
                continue;
            };
            let updated = reference_update(
                doc,
                &obs,
                last_outcomes[i].as_ref(),
                &obs.messages,
                config.observation_cap,
            );
            total.merge(&score_belief(&updated, &run.state));
            final_beliefs.push(updated);
        }
        belief_score = Some(total);
    }

    let max_score = world.max_score();
    let metrics = Metrics {
        score: run.state.score(),
        max_score,
        rounds: if termination == Termination::AllDefused {
            run.state.rounds_played()
        } else {
            run.state.config().round_limit
        },
        rounds_played: run.state.rounds_played(),
        replies: run.replies,
        valid_replies: run.valid,
        tom: run.tom,
        belief: belief_score,
        termination,
    };
    let last_round = run.state.rounds_played();
    run.transcript.push(
        last_round,
        None,
        EventBody::Termination {
            termination,
            metrics: metrics.clone(),
        },
    );
    for p in &mut policies {
        p.finish(&trial_id);
    }
    Ok(TrialOutput {
        transcript: run.transcript,
        metrics,
        final_state: run.state,
        epistemic: run.log,
        beliefs: final_beliefs,
    })
}
