//! Centralized multi-agent planning: task ordering, subtask partition, a conflict-based
//! search per subtask, composition into a timed joint plan and engine certification.

mod brute;
mod cbs;
mod tasks;

pub use brute::{brute_force_optimal, BRUTE_FORCE_LIMITS};
pub use cbs::{
    solve_subtask, AgentStart, ConstraintNode, PhaseKey, PlanConstraint, ScheduledCut, Slot,
    Snapshot, SubtaskSolution, DEFAULT_NODE_BUDGET,
};
pub use tasks::{partition_subtasks, sort_tasks, tasks, PhaseRef, SortHeuristic, Subtask, Task};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::world::{
    Action, AgentId, BombId, RoundResult, Termination, Turn, World, WorldConfig, WorldError,
    WorldState,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlannerError {
    #[error(transparent)]
    World(#[from] WorldError),
    #[error("node budget of {budget} exhausted")]
    BudgetExhausted { budget: usize },
    #[error("subtask has {bombs} bombs, too many include sets to enumerate")]
    SubtaskTooLarge { bombs: usize },
    #[error("instance exceeds brute-force limits: {0}")]
    TooLargeForBruteForce(String),
    #[error("plan diverged from the engine in round {round}: {detail}")]
    Divergence { round: u32, detail: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlannerOptions {
    /// Phases per subtask; `None` plans the whole mission at once.
    pub subtask_size: Option<usize>,
    pub heuristic: SortHeuristic,
    pub node_budget: usize,
}

impl Default for PlannerOptions {
    fn default() -> Self {
        PlannerOptions {
            subtask_size: None,
            heuristic: SortHeuristic::default(),
            node_budget: DEFAULT_NODE_BUDGET,
        }
    }
}

/// Per-agent timed action table. `actions[a][r - 1]` is agent `a`'s action in round `r`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JointPlan {
    pub actions: Vec<Vec<Action>>,
    pub rounds: u32,
    /// Points the plan expects the engine to award.
    pub score: u32,
    pub cuts: Vec<ScheduledCut>,
    pub skipped: Vec<BombId>,
}

impl JointPlan {
    pub fn action(&self, agent: AgentId, round: u32) -> Action {
        round
            .checked_sub(1)
            .and_then(|r| self.actions.get(agent.0)?.get(r as usize))
            .cloned()
            .unwrap_or(Action::Wait)
    }

    /// Builds move/wait/apply sequences from scheduled cuts.
    pub fn from_cuts(world: &World, cuts: Vec<ScheduledCut>, skipped: Vec<BombId>) -> Self {
        let config = world.config();
        let rounds = cuts.iter().map(|c| c.round).max().unwrap_or(0);
        let mut actions = vec![vec![Action::Wait; rounds as usize]; config.agents.len()];
        for (a, spec) in config.agents.iter().enumerate() {
            let mut mine: Vec<&ScheduledCut> = cuts.iter().filter(|c| c.agent.0 == a).collect();
            mine.sort_by_key(|c| c.round);
            let mut room = spec.start;
            let mut round = 0u32;
            for cut in mine {
                let path = world
                    .shortest_path(room, cut.room)
                    .expect("scheduled rooms are reachable");
                for step in path {
                    round += 1;
                    actions[a][round as usize - 1] = Action::Move { room: step };
                }
                round = cut.round;
                actions[a][round as usize - 1] = Action::Apply { color: cut.color };
                room = cut.room;
            }
        }
        let mut per_bomb: Vec<(BombId, usize)> = Vec::new();
        for c in &cuts {
            match per_bomb.iter_mut().find(|(b, _)| *b == c.bomb) {
                Some(e) => e.1 += 1,
                None => per_bomb.push((c.bomb, 1)),
            }
        }
        let score = per_bomb
            .iter()
            .filter(|(b, n)| {
                config
                    .bombs
                    .iter()
                    .any(|s| s.id == *b && s.sequence.len() == *n)
            })
            .map(|(_, n)| 10 * *n as u32)
            .sum();
        JointPlan {
            actions,
            rounds,
            score,
            cuts,
            skipped,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanReport {
    pub plan: JointPlan,
    pub subtasks: usize,
    pub nodes_generated: usize,
}

/// Sorts, partitions and solves the subtasks in order, carrying agent positions and committed
/// phase times from one subtask to the next.
pub fn plan_mission(world: &World, options: &PlannerOptions) -> Result<PlanReport, PlannerError> {
    let ordered = sort_tasks(world, options.heuristic);
    let total: usize = ordered.iter().map(|t| t.phases.len()).sum();
    let size = options.subtask_size.unwrap_or(total).max(1);
    let subtasks = partition_subtasks(&ordered, size);
    let mut snapshot = Snapshot::initial(world);
    let mut skipped = Vec::new();
    let mut nodes = 0;
    for sub in &subtasks {
        let sol = solve_subtask(world, sub, &snapshot, options.node_budget)?;
        nodes += sol.nodes_generated;
        snapshot.advance(&sol.node.cuts);
        for b in sol.skipped {
            if !skipped.contains(&b) {
                skipped.push(b);
            }
        }
    }
    Ok(PlanReport {
        plan: JointPlan::from_cuts(world, snapshot.fixed, skipped),
        subtasks: subtasks.len(),
        nodes_generated: nodes,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Execution {
    pub final_state: WorldState,
    pub results: Vec<RoundResult>,
    pub termination: Termination,
}

/// Runs the plan through the engine and fails on any rule error or score mismatch.
///
/// Deadlock detection is switched off for certification: waiting is part of a plan.
pub fn execute_plan(config: &WorldConfig, plan: &JointPlan) -> Result<Execution, PlannerError> {
    let mut cfg = config.clone();
    cfg.deadlock_window = 0;
    let mut state = crate::world::new_world(cfg)?;
    let mut results = Vec::new();
    for round in 1..=plan.rounds {
        let turns: Vec<Turn> = (0..state.agents().len())
            .map(|a| Turn::silent(AgentId(a), plan.action(AgentId(a), round)))
            .collect();
        let (next, result) = state.step_round(&turns)?;
        if let Some(bad) = result.outcomes.iter().find(|o| !o.is_ok()) {
            return Err(PlannerError::Divergence {
                round,
                detail: format!("agent {} got {:?}", bad.agent.0, bad.verdict),
            });
        }
        state = next;
        results.push(result);
    }
    if state.score() != plan.score {
        return Err(PlannerError::Divergence {
            round: plan.rounds,
            detail: format!("score {} but plan expected {}", state.score(), plan.score),
        });
    }
    let termination = state.check_termination();
    Ok(Execution {
        final_state: state,
        results,
        termination,
    })
}

pub fn compose_and_execute(
    config: &WorldConfig,
    options: &PlannerOptions,
) -> Result<(PlanReport, Execution), PlannerError> {
    let world = World::new(config.clone()).map_err(WorldError::from)?;
    let report = plan_mission(&world, options)?;
    let execution = execute_plan(config, &report.plan)?;
    Ok((report, execution))
}
