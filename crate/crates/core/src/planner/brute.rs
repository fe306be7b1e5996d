use std::collections::HashMap;

use super::{JointPlan, PlannerError, ScheduledCut};
use crate::world::{Action, AgentId, Effect, RoomId, WorldConfig, WorldState};

/// `(rooms, bombs, agents, horizon)` the exhaustive search accepts.
pub const BRUTE_FORCE_LIMITS: (usize, usize, usize, u32) = (4, 3, 3, 10);

type Key = (Vec<RoomId>, Vec<usize>);

struct Node {
    state: WorldState,
    parent: usize,
    actions: Vec<Action>,
}

fn key(state: &WorldState) -> Key {
    (
        state.agents().iter().map(|a| a.location).collect(),
        state.bombs().iter().map(|b| b.phases_cut()).collect(),
    )
}

/// Exact optimum by layered search over joint actions: maximum score within `horizon`
/// rounds, then the earliest round reaching it. Inspection never changes the outcome, so the
/// per-agent options are waiting, moving and cutting.
pub fn brute_force_optimal(config: &WorldConfig, horizon: u32) -> Result<JointPlan, PlannerError> {
    let (max_rooms, max_bombs, max_agents, max_h) = BRUTE_FORCE_LIMITS;
    if config.rooms.len() > max_rooms
        || config.bombs.len() > max_bombs
        || config.agents.len() > max_agents
        || horizon > max_h
    {
        return Err(PlannerError::TooLargeForBruteForce(format!(
            "{} rooms, {} bombs, {} agents, horizon {horizon}",
            config.rooms.len(),
            config.bombs.len(),
            config.agents.len()
        )));
    }
    let mut cfg = config.clone();
    cfg.deadlock_window = 0;
    let horizon = horizon.min(cfg.round_limit);
    let start = crate::world::new_world(cfg)?;
    let max_score = start.world().max_score();
    let n = start.agents().len();

    let mut layers: Vec<Vec<Node>> = vec![vec![Node {
        state: start,
        parent: usize::MAX,
        actions: Vec::new(),
    }]];
    let mut best = (0u32, 0usize, 0usize);
    for round in 1..=horizon as usize {
        if best.0 == max_score {
            break;
        }
        let mut next: Vec<Node> = Vec::new();
        let mut seen: HashMap<Key, usize> = HashMap::new();
        for (pi, node) in layers[round - 1].iter().enumerate() {
            // Partial joint actions, agent by agent, against the evolving state.
            let mut partial: Vec<(WorldState, Vec<Action>)> =
                vec![(node.state.clone(), Vec::new())];
            for a in 0..n {
                let mut grown = Vec::new();
                for (state, acts) in &partial {
                    let here = state.agents()[a].location;
                    let mut options = vec![Action::Wait];
                    options.extend(
                        state
                            .world()
                            .neighbors(here)
                            .iter()
                            .map(|r| Action::Move { room: *r }),
                    );
                    options.extend(
                        state
                            .legal_actions(AgentId(a))?
                            .into_iter()
                            .filter(|x| matches!(x, Action::Apply { .. })),
                    );
                    for act in options {
                        let (s, outcome) = state.apply_action(AgentId(a), &act)?;
                        if !outcome.is_ok() {
                            continue;
                        }
                        let mut acts = acts.clone();
                        acts.push(act);
                        grown.push((s, acts));
                    }
                }
                partial = grown;
            }
            for (mut state, actions) in partial {
                state.close_round(&[]);
                let k = key(&state);
                if seen.contains_key(&k) {
                    continue;
                }
                seen.insert(k, next.len());
                if state.score() > best.0 {
                    best = (state.score(), round, next.len());
                }
                next.push(Node {
                    state,
                    parent: pi,
                    actions,
                });
            }
        }
        layers.push(next);
    }

    let (score, rounds, mut idx) = best;
    let mut actions = vec![vec![Action::Wait; rounds]; n];
    let mut r = rounds;
    while r > 0 {
        let node = &layers[r][idx];
        for (a, act) in node.actions.iter().enumerate() {
            actions[a][r - 1] = act.clone();
        }
        idx = node.parent;
        r -= 1;
    }
    // Replay once to recover the cut list.
    let mut state = layers[0][0].state.clone();
    let mut cuts = Vec::new();
    for round in 1..=rounds {
        for (a, row) in actions.iter().enumerate() {
            let outcome = state.apply_in_place(AgentId(a), &row[round - 1])?;
            for e in &outcome.effects {
                if let Effect::PhaseCut { bomb, color } = e {
                    let b = state.bomb(*bomb).expect("cut bomb exists");
                    cuts.push(ScheduledCut {
                        agent: AgentId(a),
                        round: round as u32,
                        bomb: *bomb,
                        phase: b.phases_cut() - 1,
                        color: *color,
                        room: b.location,
                    });
                }
            }
        }
        state.close_round(&[]);
    }
    Ok(JointPlan {
        actions,
        rounds: rounds as u32,
        score,
        cuts,
        skipped: Vec::new(),
    })
}
