use serde::{Deserialize, Serialize};

use crate::world::{AgentId, BombId, Color, RoomId, World};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Task {
    pub bomb: BombId,
    pub location: RoomId,
    pub phases: Vec<Color>,
    /// Agents holding each phase's color.
    pub eligible: Vec<Vec<AgentId>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SortHeuristic {
    /// Minimum BFS distance from any agent's start; ties by bomb id.
    #[default]
    NearestToStart,
    ById,
}

pub fn tasks(world: &World) -> Vec<Task> {
    let agents = &world.config().agents;
    world
        .config()
        .bombs
        .iter()
        .map(|b| Task {
            bomb: b.id,
            location: b.location,
            phases: b.sequence.clone(),
            eligible: b
                .sequence
                .iter()
                .map(|c| {
                    agents
                        .iter()
                        .enumerate()
                        .filter(|(_, a)| a.tools.contains(c))
                        .map(|(i, _)| AgentId(i))
                        .collect()
                })
                .collect(),
        })
        .collect()
}

pub fn sort_tasks(world: &World, heuristic: SortHeuristic) -> Vec<Task> {
    let mut out = tasks(world);
    match heuristic {
        SortHeuristic::ById => out.sort_by_key(|t| t.bomb),
        SortHeuristic::NearestToStart => {
            let starts: Vec<_> = world
                .config()
                .agents
                .iter()
                .map(|a| world.distances(a.start))
                .collect();
            out.sort_by_key(|t| {
                let d = starts
                    .iter()
                    .filter_map(|dist| dist.get(&t.location).copied())
                    .min()
                    .unwrap_or(u32::MAX);
                (d, t.bomb)
            });
        }
    }
    out
}

/// One atomic cut the planner has to place.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseRef {
    pub bomb: BombId,
    pub index: usize,
    pub color: Color,
    pub location: RoomId,
    pub eligible: Vec<AgentId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Subtask {
    pub phases: Vec<PhaseRef>,
}

/// Flattens the ordered tasks into phases and cuts them into consecutive chunks of at most
/// `k`. A bomb split across chunks keeps its order through cross-chunk release times.
pub fn partition_subtasks(ordered: &[Task], k: usize) -> Vec<Subtask> {
    let k = k.max(1);
    let flat: Vec<PhaseRef> = ordered
        .iter()
        .flat_map(|t| {
            t.phases.iter().enumerate().map(|(i, c)| PhaseRef {
                bomb: t.bomb,
                index: i,
                color: *c,
                location: t.location,
                eligible: t.eligible[i].clone(),
            })
        })
        .collect();
    flat.chunks(k)
        .map(|c| Subtask { phases: c.to_vec() })
        .collect()
}
