//! Hand-written transition table for the two-room, one-bomb world.
//!
//! Rooms 0 and 1 share a hallway. Bomb 1 sits in room 1 with sequence red, green. Alpha holds
//! red and green; nobody holds blue.

use defuse_core::world::{
    new_world, Action, AgentId, AgentSpec, ApplyMode, BombId, BombSpec, Color, Effect, RoomId,
    RuleError, Verdict, WorldConfig, WorldState,
};

const ALPHA: AgentId = AgentId(0);
const RED: Color = Color(0);
const GREEN: Color = Color(1);
const BLUE: Color = Color(2);

/// Rows: `mode location status action -> result`.
/// Status: F fresh, H red cut, D defused, X exploded. Mode `*` covers both modes.
/// Result: `ok` (state unchanged), `loc<N>`, `reveal<colors>`, `cut<status><points>`,
/// `boom`, or a rule error name.
pub const TABLE: &str = "
* 0 F m0  -> NotAdjacent
* 0 F m1  -> loc1
* 0 F ins -> NoBombToInspect
* 0 F r   -> NoBombToDefuse
* 0 F g   -> NoBombToDefuse
* 0 F b   -> MissingTool
* 0 H m0  -> NotAdjacent
* 0 H m1  -> loc1
* 0 H ins -> NoBombToInspect
* 0 H r   -> NoBombToDefuse
* 0 H g   -> NoBombToDefuse
* 0 H b   -> MissingTool
* 0 D m0  -> NotAdjacent
* 0 D m1  -> loc1
* 0 D ins -> NoBombToInspect
* 0 D r   -> NoBombToDefuse
* 0 D g   -> NoBombToDefuse
* 0 D b   -> MissingTool
E 0 X m0  -> NotAdjacent
E 0 X m1  -> loc1
E 0 X ins -> NoBombToInspect
E 0 X r   -> NoBombToDefuse
E 0 X g   -> NoBombToDefuse
E 0 X b   -> MissingTool
* 1 F m0  -> loc0
* 1 F m1  -> NotAdjacent
* 1 F ins -> reveal rg
* 1 F r   -> cut H 0
G 1 F g   -> WrongSequence
E 1 F g   -> boom
* 1 F b   -> MissingTool
* 1 H m0  -> loc0
* 1 H m1  -> NotAdjacent
* 1 H ins -> reveal g
G 1 H r   -> WrongSequence
E 1 H r   -> boom
* 1 H g   -> cut D 20
* 1 H b   -> MissingTool
* 1 D m0  -> loc0
* 1 D m1  -> NotAdjacent
* 1 D ins -> NoBombToInspect
* 1 D r   -> NoBombToDefuse
* 1 D g   -> NoBombToDefuse
* 1 D b   -> MissingTool
E 1 X m0  -> loc0
E 1 X m1  -> NotAdjacent
E 1 X ins -> NoBombToInspect
E 1 X r   -> NoBombToDefuse
E 1 X g   -> NoBombToDefuse
E 1 X b   -> MissingTool
";

fn config(mode: ApplyMode, start: u32) -> WorldConfig {
    WorldConfig {
        n_rooms: 2,
        n_colors: 3,
        rooms: vec![RoomId(0), RoomId(1)],
        edges: vec![(RoomId(0), RoomId(1))],
        bombs: vec![BombSpec {
            id: BombId(1),
            location: RoomId(1),
            sequence: vec![RED, GREEN],
        }],
        agents: vec![AgentSpec {
            call_sign: "Alpha".into(),
            start: RoomId(start),
            tools: vec![RED, GREEN],
        }],
        round_limit: 30,
        deadlock_window: 0,
        apply_mode: mode,
        seed: 0,
        color_names: None,
    }
}

fn action(code: &str) -> Action {
    match code {
        "m0" => Action::Move { room: RoomId(0) },
        "m1" => Action::Move { room: RoomId(1) },
        "ins" => Action::Inspect,
        "r" => Action::Apply { color: RED },
        "g" => Action::Apply { color: GREEN },
        "b" => Action::Apply { color: BLUE },
        other => panic!("bad action code {other}"),
    }
}

/// Builds a state with Alpha at `location` and the bomb at `status`, using only actions
/// whose effect is fixed by the rules.
fn reach(mode: ApplyMode, location: u32, status: char) -> WorldState {
    let mut state = new_world(config(mode, 1)).unwrap();
    let prefix: &[&str] = match status {
        'F' => &[],
        'H' => &["r"],
        'D' => &["r", "g"],
        'X' => &["g"],
        other => panic!("bad status {other}"),
    };
    for code in prefix {
        state.apply_in_place(ALPHA, &action(code)).unwrap();
    }
    if location == 0 {
        state.apply_in_place(ALPHA, &action("m0")).unwrap();
    }
    state
}

fn status_of(state: &WorldState) -> char {
    let bomb = &state.bombs()[0];
    match (bomb.phases_cut(), bomb.is_live()) {
        (_, true) if bomb.phases_cut() == 0 => 'F',
        (1, true) => 'H',
        (2, false) => 'D',
        (_, false) => 'X',
        _ => '?',
    }
}

fn error_name(e: &RuleError) -> &'static str {
    match e {
        RuleError::NotAdjacent { .. } => "NotAdjacent",
        RuleError::NoBombToInspect { .. } => "NoBombToInspect",
        RuleError::NoBombToDefuse { .. } => "NoBombToDefuse",
        RuleError::WrongSequence { .. } => "WrongSequence",
        RuleError::MissingTool { .. } => "MissingTool",
        RuleError::Unparseable { .. } => "Unparseable",
    }
}

fn colors(code: &str) -> Vec<Color> {
    code.chars()
        .map(|c| match c {
            'r' => RED,
            'g' => GREEN,
            _ => BLUE,
        })
        .collect()
}

/// Checks one row; `None` when the engine agrees.
fn check(mode: ApplyMode, location: u32, status: char, code: &str, expect: &str) -> Option<String> {
    let before = reach(mode, location, status);
    let snapshot = before.clone();
    let (after, outcome) = before.apply_action(ALPHA, &action(code)).unwrap();
    let ctx = format!("{mode:?} {location} {status} {code} -> {expect}");
    if before != snapshot {
        return Some(format!("{ctx}: pure form mutated its input"));
    }
    let mut words = expect.split_whitespace();
    let head = words.next().unwrap();
    let got_loc = after.agents()[0].location.0;
    let got_status = status_of(&after);
    let unchanged = got_loc == location && got_status == status && after.score() == before.score();
    let ok = match head {
        "loc0" | "loc1" => {
            let to: u32 = head[3..].parse().unwrap();
            outcome.is_ok()
                && got_loc == to
                && got_status == status
                && outcome.effects == vec![Effect::MovedTo { room: RoomId(to) }]
        }
        "reveal" => {
            let seq = colors(words.next().unwrap());
            outcome.is_ok()
                && unchanged
                && outcome.effects
                    == vec![Effect::SequenceRevealed {
                        bomb: BombId(1),
                        sequence: seq.clone(),
                    }]
                && after.agents()[0].known_sequences.get(&BombId(1)) == Some(&seq)
        }
        "cut" => {
            let to = words.next().unwrap().chars().next().unwrap();
            let points: u32 = words.next().unwrap().parse().unwrap();
            outcome.is_ok()
                && got_loc == location
                && got_status == to
                && outcome.score_delta == points
                && after.score() == before.score() + points
        }
        "boom" => {
            outcome.is_ok()
                && got_status == 'X'
                && got_loc == location
                && outcome.score_delta == 0
                && outcome.effects == vec![Effect::BombExploded { bomb: BombId(1) }]
        }
        name => {
            matches!(&outcome.verdict, Verdict::RuleError(e) if error_name(e) == name)
                && unchanged
                && outcome.effects.is_empty()
        }
    };
    (!ok).then(|| {
        format!(
            "{ctx}: engine gave {:?} {:?}, now at {got_loc} {got_status}",
            outcome.verdict, outcome.effects
        )
    })
}

/// Every (state, action) pair of the enumerable space, checked against the table.
/// Returns the number of pairs checked and the disagreements.
pub fn engine_table_mismatches() -> (usize, Vec<String>) {
    let mut checked = 0;
    let mut bad = Vec::new();
    let mut covered = std::collections::BTreeSet::new();
    for line in TABLE.lines().map(str::trim).filter(|l| !l.is_empty()) {
        let (lhs, expect) = line.split_once("->").unwrap();
        let f: Vec<&str> = lhs.split_whitespace().collect();
        let modes: &[ApplyMode] = match f[0] {
            "G" => &[ApplyMode::Guarded],
            "E" => &[ApplyMode::Explosive],
            _ => &[ApplyMode::Guarded, ApplyMode::Explosive],
        };
        let location: u32 = f[1].parse().unwrap();
        let status = f[2].chars().next().unwrap();
        for &mode in modes {
            checked += 1;
            if !covered.insert((format!("{mode:?}"), location, status, f[3].to_string())) {
                bad.push(format!("duplicate row {line}"));
            }
            if let Some(m) = check(mode, location, status, f[3], expect.trim()) {
                bad.push(m);
            }
        }
    }
    // Guarded: 2 locations x 3 statuses x 6 actions. Explosive adds the exploded status.
    let expected_pairs = 2 * 3 * 6 + 2 * 4 * 6;
    if covered.len() != expected_pairs {
        bad.push(format!(
            "table covers {} pairs, expected {expected_pairs}",
            covered.len()
        ));
    }
    (checked, bad)
}
