use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};

use serde::{Deserialize, Serialize};

use super::tasks::{PhaseRef, Subtask};
use super::PlannerError;
use crate::world::{AgentId, BombId, Color, RoomId, World};

pub const DEFAULT_NODE_BUDGET: usize = 500_000;

/// A bomb phase, `(bomb, index into its full sequence)`.
pub type PhaseKey = (BombId, usize);

/// Execution order across the whole team: `round * agents + agent index`.
pub type Slot = u64;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "constraint", rename_all = "snake_case")]
pub enum PlanConstraint {
    /// The phase executes at slot `slot` or later.
    NotBefore { phase: PhaseKey, slot: Slot },
    /// The phase executes strictly before `slot`.
    Before { phase: PhaseKey, slot: Slot },
    /// `first` executes before `then`.
    Order { first: PhaseKey, then: PhaseKey },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduledCut {
    pub agent: AgentId,
    pub round: u32,
    pub bomb: BombId,
    pub phase: usize,
    pub color: Color,
    pub room: RoomId,
}

impl ScheduledCut {
    pub fn slot(&self, agents: usize) -> Slot {
        self.round as Slot * agents as Slot + self.agent.0 as Slot
    }
}

/// A node of the constraint tree together with the schedule its constraints produce.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintNode {
    pub depth: usize,
    pub constraints: Vec<PlanConstraint>,
    /// Per subtask bomb, how many of its leading subtask phases the plan takes.
    pub included: Vec<(BombId, usize)>,
    pub assignment: Vec<(PhaseKey, AgentId)>,
    pub cuts: Vec<ScheduledCut>,
    /// 10 points per phase of every bomb whose subtask phases are all taken.
    pub ret: u32,
    /// Last cut round, 0 when nothing is cut.
    pub makespan: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentStart {
    pub room: RoomId,
    /// Last round already committed; new cuts happen strictly later.
    pub after: u32,
}

/// What earlier subtasks left behind.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Snapshot {
    pub agents: Vec<AgentStart>,
    pub fixed: Vec<ScheduledCut>,
    pub horizon: u32,
}

impl Snapshot {
    pub fn initial(world: &World) -> Self {
        Snapshot {
            agents: world
                .config()
                .agents
                .iter()
                .map(|a| AgentStart {
                    room: a.start,
                    after: 0,
                })
                .collect(),
            fixed: Vec::new(),
            horizon: world.config().round_limit,
        }
    }

    /// Commits a solved subtask.
    pub fn advance(&mut self, cuts: &[ScheduledCut]) {
        for cut in cuts {
            let a = &mut self.agents[cut.agent.0];
            if cut.round > a.after {
                a.after = cut.round;
                a.room = cut.room;
            }
            self.fixed.push(cut.clone());
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubtaskSolution {
    pub node: ConstraintNode,
    /// Bombs dropped because a phase has no eligible agent or an earlier phase was dropped.
    pub skipped: Vec<BombId>,
    pub nodes_generated: usize,
}

struct Problem<'a> {
    world: &'a World,
    snapshot: &'a Snapshot,
    k: usize,
    phases: Vec<PhaseRef>,
    fixed: BTreeMap<PhaseKey, Slot>,
    room_index: BTreeMap<RoomId, usize>,
    dist: Vec<Vec<Option<u32>>>,
}

#[derive(Clone, Copy)]
enum When {
    Fixed(Slot),
    Planned(Slot),
    Absent,
}

impl<'a> Problem<'a> {
    fn new(world: &'a World, snapshot: &'a Snapshot, phases: Vec<PhaseRef>) -> Self {
        let k = world.agent_count();
        let fixed = snapshot
            .fixed
            .iter()
            .map(|c| ((c.bomb, c.phase), c.slot(k)))
            .collect();
        let rooms: Vec<RoomId> = world.rooms().collect();
        let room_index = rooms.iter().enumerate().map(|(i, r)| (*r, i)).collect();
        let dist = rooms
            .iter()
            .map(|a| rooms.iter().map(|b| world.distance(*a, *b)).collect())
            .collect();
        Problem {
            world,
            snapshot,
            k,
            phases,
            fixed,
            room_index,
            dist,
        }
    }

    fn distance(&self, a: RoomId, b: RoomId) -> Option<u32> {
        self.dist[self.room_index[&a]][self.room_index[&b]]
    }

    fn phase_pos(&self, key: PhaseKey) -> Option<usize> {
        self.phases.iter().position(|p| (p.bomb, p.index) == key)
    }

    fn when(&self, node: &ConstraintNode, key: PhaseKey) -> When {
        if let Some(s) = self.fixed.get(&key) {
            return When::Fixed(*s);
        }
        node.cuts
            .iter()
            .find(|c| (c.bomb, c.phase) == key)
            .map_or(When::Absent, |c| When::Planned(c.slot(self.k)))
    }

    /// Slot bounds per subtask phase implied by constraints and committed predecessors.
    fn bounds(&self, constraints: &[PlanConstraint]) -> Vec<(Slot, Slot)> {
        self.phases
            .iter()
            .map(|p| {
                let mut lo = 0;
                let mut hi = Slot::MAX;
                if p.index > 0 {
                    if let Some(s) = self.fixed.get(&(p.bomb, p.index - 1)) {
                        lo = s + 1;
                    }
                }
                for c in constraints {
                    match c {
                        PlanConstraint::NotBefore { phase, slot }
                            if *phase == (p.bomb, p.index) =>
                        {
                            lo = lo.max(*slot)
                        }
                        PlanConstraint::Before { phase, slot } if *phase == (p.bomb, p.index) => {
                            hi = hi.min(*slot)
                        }
                        _ => {}
                    }
                }
                (lo, hi)
            })
            .collect()
    }

    /// Earliest-completion schedule for one agent over its assigned phases.
    fn agent_schedule(
        &self,
        agent: usize,
        assigned: &[usize],
        bounds: &[(Slot, Slot)],
    ) -> Option<Vec<(usize, u32)>> {
        if assigned.is_empty() {
            return Some(Vec::new());
        }
        let n = assigned.len();
        let k = self.k as Slot;
        let i = agent as Slot;
        let start = self.snapshot.agents[agent];
        let horizon = self.snapshot.horizon;
        let window: Vec<(u32, u32)> = assigned
            .iter()
            .map(|&p| {
                let (lo, hi) = bounds[p];
                let min_round = if lo <= i { 0 } else { (lo - i).div_ceil(k) };
                let max_round = if hi == Slot::MAX {
                    horizon as Slot
                } else if hi <= i {
                    return (1, 0);
                } else {
                    ((hi - i - 1) / k).min(horizon as Slot)
                };
                (
                    min_round.min(u32::MAX as Slot) as u32,
                    max_round.min(u32::MAX as Slot) as u32,
                )
            })
            .collect();
        // Own phases of the same bomb must follow their order.
        let needs: Vec<usize> = assigned
            .iter()
            .map(|&p| {
                let me = &self.phases[p];
                assigned
                    .iter()
                    .enumerate()
                    .filter(|(_, &q)| {
                        let o = &self.phases[q];
                        o.bomb == me.bomb && o.index < me.index
                    })
                    .fold(0usize, |m, (j, _)| m | (1 << j))
            })
            .collect();

        const NONE: u32 = u32::MAX;
        let full = (1usize << n) - 1;
        let mut best = vec![NONE; (full + 1) * n];
        let mut parent = vec![usize::MAX; (full + 1) * n];
        for j in 0..n {
            if needs[j] != 0 {
                continue;
            }
            let d = self.distance(start.room, self.phases[assigned[j]].location)?;
            let t = (start.after + d + 1).max(window[j].0);
            if t <= window[j].1 {
                best[(1 << j) * n + j] = t;
            }
        }
        for mask in 1..=full {
            for last in 0..n {
                let t0 = best[mask * n + last];
                if t0 == NONE {
                    continue;
                }
                let from = self.phases[assigned[last]].location;
                for j in 0..n {
                    if mask & (1 << j) != 0 || needs[j] & mask != needs[j] {
                        continue;
                    }
                    let Some(d) = self.distance(from, self.phases[assigned[j]].location) else {
                        continue;
                    };
                    let t = (t0 + d + 1).max(window[j].0);
                    let idx = (mask | (1 << j)) * n + j;
                    if t <= window[j].1 && t < best[idx] {
                        best[idx] = t;
                        parent[idx] = last;
                    }
                }
            }
        }
        let last = (0..n)
            .filter(|&l| best[full * n + l] != NONE)
            .min_by_key(|&l| best[full * n + l])?;
        let mut out = Vec::with_capacity(n);
        let (mut mask, mut cur) = (full, last);
        loop {
            out.push((assigned[cur], best[mask * n + cur]));
            let prev = parent[mask * n + cur];
            mask &= !(1 << cur);
            if prev == usize::MAX {
                break;
            }
            cur = prev;
        }
        out.reverse();
        Some(out)
    }

    /// Fills `cuts`, `ret` and `makespan`; `None` when some agent has no feasible schedule.
    fn evaluate(&self, mut node: ConstraintNode) -> Option<ConstraintNode> {
        let bounds = self.bounds(&node.constraints);
        let mut cuts = Vec::new();
        for agent in 0..self.k {
            let assigned: Vec<usize> = node
                .assignment
                .iter()
                .filter(|(_, a)| a.0 == agent)
                .filter_map(|(key, _)| self.phase_pos(*key))
                .collect();
            for (p, round) in self.agent_schedule(agent, &assigned, &bounds)? {
                let ph = &self.phases[p];
                cuts.push(ScheduledCut {
                    agent: AgentId(agent),
                    round,
                    bomb: ph.bomb,
                    phase: ph.index,
                    color: ph.color,
                    room: ph.location,
                });
            }
        }
        cuts.sort_by_key(|c| c.slot(self.k));
        node.makespan = cuts.iter().map(|c| c.round).max().unwrap_or(0);
        node.cuts = cuts;
        Some(node)
    }

    /// Turns "`first` before `then`" into a constraint on planned phases. `Err` when it cannot
    /// hold, `Ok(None)` when it already holds for good.
    fn order(
        &self,
        node: &ConstraintNode,
        first: PhaseKey,
        then: PhaseKey,
    ) -> Result<Option<PlanConstraint>, ()> {
        match (self.when(node, first), self.when(node, then)) {
            (_, When::Absent) => Ok(None),
            (When::Absent, _) => Err(()),
            (When::Planned(_), When::Planned(_)) => Ok(Some(PlanConstraint::Order { first, then })),
            (When::Fixed(s), When::Planned(_)) => Ok(Some(PlanConstraint::NotBefore {
                phase: then,
                slot: s + 1,
            })),
            (When::Planned(_), When::Fixed(s)) => Ok(Some(PlanConstraint::Before {
                phase: first,
                slot: s,
            })),
            (When::Fixed(a), When::Fixed(b)) => {
                if a < b {
                    Ok(None)
                } else {
                    Err(())
                }
            }
        }
    }

    /// The earliest conflict as a list of alternative constraints, one per child.
    fn conflict(&self, node: &ConstraintNode) -> Option<Vec<Option<PlanConstraint>>> {
        let k = self.k;
        let slot_of = |key: PhaseKey| match self.when(node, key) {
            When::Fixed(s) | When::Planned(s) => Some(s),
            When::Absent => None,
        };

        let mut pairs: Vec<(PhaseKey, PhaseKey)> = node
            .cuts
            .iter()
            .filter(|c| c.phase > 0)
            .map(|c| ((c.bomb, c.phase - 1), (c.bomb, c.phase)))
            .collect();
        for c in &node.constraints {
            if let PlanConstraint::Order { first, then } = c {
                pairs.push((*first, *then));
            }
        }
        let mut worst: Option<(Slot, PhaseKey, PhaseKey)> = None;
        for (first, then) in pairs {
            let (Some(a), Some(b)) = (slot_of(first), slot_of(then)) else {
                continue;
            };
            if a >= b && worst.is_none_or(|w| b < w.0) {
                worst = Some((b, first, then));
            }
        }
        if let Some((b, first, then)) = worst {
            return Some(vec![
                Some(PlanConstraint::Before {
                    phase: first,
                    slot: b,
                }),
                Some(PlanConstraint::NotBefore {
                    phase: then,
                    slot: b + 1,
                }),
            ]);
        }

        // Masking: the engine cuts the first live bomb in the room whose head matches.
        let bombs = &self.world.config().bombs;
        let mut all: Vec<&ScheduledCut> = self.snapshot.fixed.iter().chain(&node.cuts).collect();
        all.sort_by_key(|c| c.slot(k));
        for y in &all {
            let ys = y.slot(k);
            let y_fixed = self.fixed.contains_key(&(y.bomb, y.phase));
            let Some(own) = bombs.iter().position(|b| b.id == y.bomb) else {
                continue;
            };
            for x in bombs[..own].iter().filter(|b| b.location == y.room) {
                let h = (0..x.sequence.len())
                    .take_while(|&i| slot_of((x.id, i)).is_some_and(|s| s < ys))
                    .count();
                if h >= x.sequence.len() || x.sequence[h] != y.color {
                    continue;
                }
                let later_fixed = self.fixed.contains_key(&(x.id, h));
                let earlier_fixed = h == 0 || self.fixed.contains_key(&(x.id, h - 1));
                if y_fixed && later_fixed && earlier_fixed {
                    continue;
                }
                let mut children = Vec::new();
                if h > 0 {
                    if let Ok(Some(c)) = self.order(node, (y.bomb, y.phase), (x.id, h - 1)) {
                        children.push(Some(c));
                    }
                }
                if let Ok(Some(c)) = self.order(node, (x.id, h), (y.bomb, y.phase)) {
                    children.push(Some(c));
                }
                return Some(children);
            }
        }
        None
    }
}

/// Best plan for one subtask: maximum return, then minimum makespan.
///
/// Roots cover every choice of phase prefixes per bomb and every assignment of phases to eligible agents; the
/// tree branches on precedence and masking conflicts, and the first conflict-free node popped
/// is optimal.
pub fn solve_subtask(
    world: &World,
    subtask: &Subtask,
    snapshot: &Snapshot,
    node_budget: usize,
) -> Result<SubtaskSolution, PlannerError> {
    let fixed_keys: Vec<PhaseKey> = snapshot.fixed.iter().map(|c| (c.bomb, c.phase)).collect();
    // Each bomb contributes a prefix of its subtask phases. Only a complete prefix earns
    // credit; shorter ones exist for cuts that unmask another bomb's head.
    let mut units: Vec<(BombId, usize, usize)> = Vec::new();
    let mut phases: Vec<PhaseRef> = Vec::new();
    let mut skipped: Vec<BombId> = Vec::new();
    for p in &subtask.phases {
        if units.iter().any(|u| u.0 == p.bomb) {
            continue;
        }
        let mine: Vec<&PhaseRef> = subtask.phases.iter().filter(|q| q.bomb == p.bomb).collect();
        let orphan = p.index > 0 && !fixed_keys.contains(&(p.bomb, p.index - 1));
        let usable = if orphan {
            0
        } else {
            mine.iter().take_while(|q| !q.eligible.is_empty()).count()
        };
        if usable < mine.len() {
            skipped.push(p.bomb);
        }
        phases.extend(mine[..usable].iter().map(|q| (*q).clone()));
        units.push((p.bomb, mine.len(), usable));
    }
    let roots: usize = units.iter().map(|u| u.2 + 1).product();
    if roots > 1 << 18 {
        return Err(PlannerError::SubtaskTooLarge { bombs: units.len() });
    }
    let problem = Problem::new(world, snapshot, phases);

    enum Entry {
        Root(Vec<(BombId, usize)>),
        Node(Box<ConstraintNode>),
    }
    type Key = Reverse<(u32, u32, usize, usize)>;
    let mut heap: BinaryHeap<(Key, usize)> = BinaryHeap::new();
    let mut entries: Vec<Option<Entry>> = Vec::new();
    let mut seq = 0usize;
    let mut push = |heap: &mut BinaryHeap<(Key, usize)>,
                    entries: &mut Vec<Option<Entry>>,
                    ret: u32,
                    makespan: u32,
                    depth: usize,
                    e: Entry| {
        heap.push((
            Reverse((u32::MAX - ret, makespan, depth, seq)),
            entries.len(),
        ));
        entries.push(Some(e));
        seq += 1;
    };

    let mut lens = vec![0usize; units.len()];
    loop {
        let prefix: Vec<(BombId, usize)> =
            units.iter().zip(&lens).map(|(u, l)| (u.0, *l)).collect();
        let ret = units
            .iter()
            .zip(&lens)
            .filter(|(u, l)| **l == u.1)
            .map(|(u, _)| 10 * u.1 as u32)
            .sum();
        push(&mut heap, &mut entries, ret, 0, 0, Entry::Root(prefix));
        let mut i = 0;
        while i < lens.len() {
            lens[i] += 1;
            if lens[i] <= units[i].2 {
                break;
            }
            lens[i] = 0;
            i += 1;
        }
        if i == lens.len() {
            break;
        }
    }

    let mut generated = 0usize;
    while let Some((key, idx)) = heap.pop() {
        match entries[idx].take().expect("each entry is popped once") {
            Entry::Root(included) => {
                let ret = u32::MAX - key.0 .0;
                let chosen: Vec<&PhaseRef> = problem
                    .phases
                    .iter()
                    .filter(|p| {
                        included.iter().any(|(b, l)| {
                            *b == p.bomb && p.index < first_index(&problem.phases, *b) + l
                        })
                    })
                    .collect();
                let mut choice = vec![0usize; chosen.len()];
                loop {
                    generated += 1;
                    if generated > node_budget {
                        return Err(PlannerError::BudgetExhausted {
                            budget: node_budget,
                        });
                    }
                    let node = ConstraintNode {
                        depth: 0,
                        constraints: Vec::new(),
                        included: included.clone(),
                        assignment: chosen
                            .iter()
                            .zip(&choice)
                            .map(|(p, &c)| ((p.bomb, p.index), p.eligible[c]))
                            .collect(),
                        cuts: Vec::new(),
                        ret,
                        makespan: 0,
                    };
                    if let Some(node) = problem.evaluate(node) {
                        push(
                            &mut heap,
                            &mut entries,
                            node.ret,
                            node.makespan,
                            0,
                            Entry::Node(Box::new(node)),
                        );
                    }
                    // Next assignment in odometer order.
                    let mut i = 0;
                    while i < choice.len() {
                        choice[i] += 1;
                        if choice[i] < chosen[i].eligible.len() {
                            break;
                        }
                        choice[i] = 0;
                        i += 1;
                    }
                    if i == choice.len() {
                        break;
                    }
                }
            }
            Entry::Node(node) => {
                let Some(children) = problem.conflict(&node) else {
                    return Ok(SubtaskSolution {
                        node: *node,
                        skipped,
                        nodes_generated: generated,
                    });
                };
                for extra in children {
                    generated += 1;
                    if generated > node_budget {
                        return Err(PlannerError::BudgetExhausted {
                            budget: node_budget,
                        });
                    }
                    let mut child = (*node).clone();
                    child.depth += 1;
                    if let Some(c) = extra {
                        child.constraints.push(c);
                    }
                    if let Some(child) = problem.evaluate(child) {
                        let (r, m, d) = (child.ret, child.makespan, child.depth);
                        push(
                            &mut heap,
                            &mut entries,
                            r,
                            m,
                            d,
                            Entry::Node(Box::new(child)),
                        );
                    }
                }
            }
        }
    }
    // The empty include set always yields a conflict-free node.
    unreachable!("search space exhausted without the empty plan")
}

fn first_index(phases: &[PhaseRef], bomb: BombId) -> usize {
    phases
        .iter()
        .filter(|p| p.bomb == bomb)
        .map(|p| p.index)
        .min()
        .unwrap_or(0)
}
