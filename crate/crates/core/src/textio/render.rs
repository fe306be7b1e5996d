use serde::{Deserialize, Serialize};

use super::templates::TemplateSet;
use crate::world::{
    Action, ActionOutcome, AgentId, BombId, Color, Effect, Message, Palette, RoomId, RuleError,
    Verdict, World, WorldState,
};

const NUMBER_WORDS: [&str; 21] = [
    "zero",
    "one",
    "two",
    "three",
    "four",
    "five",
    "six",
    "seven",
    "eight",
    "nine",
    "ten",
    "eleven",
    "twelve",
    "thirteen",
    "fourteen",
    "fifteen",
    "sixteen",
    "seventeen",
    "eighteen",
    "nineteen",
    "twenty",
];

pub fn number_word(n: usize) -> String {
    NUMBER_WORDS
        .get(n)
        .map(|w| w.to_string())
        .unwrap_or_else(|| n.to_string())
}

/// `a`, `a and b`, `a, b, and c`.
pub fn join_list<S: AsRef<str>>(items: &[S], conjunction: &str) -> String {
    match items {
        [] => String::new(),
        [one] => one.as_ref().to_string(),
        [a, b] => format!("{} {conjunction} {}", a.as_ref(), b.as_ref()),
        [init @ .., last] => {
            let head: Vec<&str> = init.iter().map(AsRef::as_ref).collect();
            format!("{}, {conjunction} {}", head.join(", "), last.as_ref())
        }
    }
}

fn colors_and(palette: &Palette, colors: &[Color]) -> String {
    let names: Vec<String> = colors.iter().map(|c| palette.name(*c)).collect();
    join_list(&names, "and")
}

fn rooms_text(rooms: &[RoomId]) -> Vec<String> {
    rooms.iter().map(|r| r.to_string()).collect()
}

/// Prose description of the room graph in the style of the task prompt.
pub fn map_description(world: &World) -> String {
    let rooms: Vec<RoomId> = world.rooms().collect();
    if rooms.len() == 1 {
        return format!("There is a single room, Room {}.", rooms[0]);
    }
    let mut out = format!(
        "The rooms are numbered {}.",
        join_list(&rooms_text(&rooms), "and")
    );
    let hub = if rooms.len() > 2 {
        rooms
            .iter()
            .copied()
            .find(|r| world.neighbors(*r).len() == rooms.len() - 1)
    } else {
        None
    };
    if let Some(h) = hub {
        out.push_str(&format!(" Room {h} is connected to all other rooms."));
    }
    for room in &rooms {
        if Some(*room) == hub {
            continue;
        }
        let later: Vec<RoomId> = world
            .neighbors(*room)
            .iter()
            .copied()
            .filter(|n| n > room && Some(*n) != hub)
            .collect();
        if !later.is_empty() {
            out.push_str(&format!(
                " Room {room} is connected to room {}.",
                join_list(&rooms_text(&later), "and")
            ));
        }
    }
    out
}

fn phase_sentence(world: &World) -> String {
    let mut sizes: Vec<usize> = world
        .config()
        .bombs
        .iter()
        .map(|b| b.sequence.len())
        .collect();
    sizes.sort_unstable();
    sizes.dedup();
    if sizes.is_empty() {
        return "There are no bombs to disarm.".to_string();
    }
    let kinds: Vec<String> = sizes
        .iter()
        .map(|s| format!("{}-phase", number_word(*s)))
        .collect();
    let counts: Vec<String> = sizes.iter().map(|s| s.to_string()).collect();
    let noun = if sizes == [1] {
        "application"
    } else {
        "applications"
    };
    format!(
        "There are {} bombs, needing {} color-coded tool {noun} in sequence to disarm.",
        join_list(&kinds, "and"),
        join_list(&counts, "or")
    )
}

/// The full rules prompt for one agent.
pub fn render_context(world: &World, agent: AgentId) -> String {
    render_context_with(TemplateSet::builtin(), world, agent)
}

pub fn render_context_with(templates: &TemplateSet, world: &World, agent: AgentId) -> String {
    let cfg = world.config();
    let palette = world.palette();
    let others = cfg.agents.len().saturating_sub(1);
    let company = match others {
        0 => "Working on your own,".to_string(),
        1 => "Alongside one other player,".to_string(),
        n => format!("Alongside {} other players,", number_word(n)),
    };
    let audience = match others {
        0 => "the team log",
        1 => "your teammate",
        2 => "both of your teammates",
        _ => "all of your teammates",
    };
    let n_bombs = cfg.bombs.len();

    let tool_counts: Vec<usize> = cfg.agents.iter().map(|a| a.tools.len()).collect();
    let tools_intro = if tool_counts.windows(2).all(|w| w[0] == w[1]) {
        let n = tool_counts.first().copied().unwrap_or(0);
        let noun = if n == 1 { "cutter" } else { "cutters" };
        format!(
            "Each player is equipped with {} color-coded wire {noun}.",
            number_word(n)
        )
    } else {
        "Each player is equipped with color-coded wire cutters.".to_string()
    };
    let mut clauses = Vec::new();
    if let Some(me) = cfg.agents.get(agent.0) {
        clauses.push(format!(
            "As player {}, you have {} tools",
            me.call_sign,
            colors_and(palette, &me.tools)
        ));
    }
    let verbs = ["wields", "possesses"];
    for (i, other) in cfg
        .agents
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != agent.0)
        .map(|(_, a)| a)
        .enumerate()
    {
        clauses.push(format!(
            "player {} {} {}",
            other.call_sign,
            verbs[i % verbs.len()],
            colors_and(palette, &other.tools)
        ));
    }
    let tools_sentence = format!("{}.", join_list(&clauses, "and"));

    templates.fill(
        "context",
        &[
            ("company_sentence", company),
            ("room_count", number_word(cfg.rooms.len())),
            ("bomb_count", number_word(n_bombs)),
            (
                "bomb_noun",
                if n_bombs == 1 { "bomb" } else { "bombs" }.to_string(),
            ),
            ("map_description", map_description(world)),
            ("phase_sentence", phase_sentence(world)),
            ("tools_intro", tools_intro),
            ("tools_sentence", tools_sentence),
            ("audience", audience.to_string()),
        ],
    )
}

/// Corrective message for a rule error, prefixed with the generic notice.
pub fn render_error(error: &RuleError, palette: &Palette) -> String {
    render_error_with(TemplateSet::builtin(), error, palette)
}

pub fn render_error_with(templates: &TemplateSet, error: &RuleError, palette: &Palette) -> String {
    let invalid = templates.get("error_invalid").to_string();
    let detail = match error {
        RuleError::NotAdjacent { target, current } => templates.fill(
            "error_not_adjacent",
            &[
                ("target", target.to_string()),
                ("current", current.to_string()),
            ],
        ),
        RuleError::NoBombToInspect { room } => {
            templates.fill("error_no_bomb_inspect", &[("room", room.to_string())])
        }
        RuleError::WrongSequence {
            bomb,
            color,
            remaining,
        } => templates.fill(
            "error_wrong_sequence",
            &[
                ("color", palette.title(*color)),
                ("bomb", bomb.to_string()),
                ("sequence", palette.sequence(remaining)),
            ],
        ),
        RuleError::NoBombToDefuse { room } => {
            templates.fill("error_no_bomb_defuse", &[("room", room.to_string())])
        }
        RuleError::MissingTool { color } => {
            templates.fill("error_missing_tool", &[("color", palette.title(*color))])
        }
        RuleError::Unparseable { .. } => return invalid,
    };
    format!("{invalid} {detail}")
}

/// Feedback line describing an agent's previous action.
pub fn render_feedback(
    templates: &TemplateSet,
    outcome: Option<&ActionOutcome>,
    room: RoomId,
    palette: &Palette,
) -> String {
    let Some(outcome) = outcome else {
        return templates.get("feedback_first_round").to_string();
    };
    match &outcome.verdict {
        Verdict::RuleError(err) => render_error_with(templates, err, palette),
        Verdict::Ok => {
            if outcome.action == Action::Wait {
                return templates.fill("feedback_wait", &[("room", room.to_string())]);
            }
            let parts: Vec<String> = outcome
                .effects
                .iter()
                .map(|e| match e {
                    Effect::MovedTo { room } => {
                        templates.fill("feedback_moved", &[("room", room.to_string())])
                    }
                    Effect::SequenceRevealed { bomb, sequence } => templates.fill(
                        "feedback_inspected",
                        &[
                            ("bomb", bomb.to_string()),
                            ("sequence", palette.sequence(sequence)),
                        ],
                    ),
                    Effect::PhaseCut { bomb, color } => templates.fill(
                        "feedback_cut",
                        &[("bomb", bomb.to_string()), ("color", palette.name(*color))],
                    ),
                    Effect::BombDefused { bomb, points } => templates.fill(
                        "feedback_defused",
                        &[("bomb", bomb.to_string()), ("points", points.to_string())],
                    ),
                    Effect::BombExploded { bomb } => {
                        templates.fill("feedback_exploded", &[("bomb", bomb.to_string())])
                    }
                })
                .collect();
            parts.join(" ")
        }
    }
}

/// What one agent perceives at the start of its turn, plus the rendered text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Observation {
    pub round: u32,
    pub score: u32,
    pub agent: AgentId,
    pub call_sign: String,
    pub room: RoomId,
    pub feedback: String,
    /// Live bombs here with the sequence this agent has inspected, if any.
    pub room_bombs: Vec<(BombId, Option<Vec<Color>>)>,
    pub co_located: Vec<AgentId>,
    /// Every agent's call sign and room, self included, in turn order.
    pub teammate_locations: Vec<(String, RoomId)>,
    /// Teammates' messages from the previous round.
    pub messages: Vec<Message>,
    pub adjacent: Vec<RoomId>,
    pub tools: Vec<Color>,
    /// Structured legality set for scripted policies. Never part of `text`.
    pub legal_actions: Vec<Action>,
    pub text: String,
}

pub fn render_observation(
    state: &WorldState,
    agent: AgentId,
    last_outcome: Option<&ActionOutcome>,
    inbound: &[Message],
) -> Option<Observation> {
    render_observation_with(TemplateSet::builtin(), state, agent, last_outcome, inbound)
}

/// `None` when `agent` does not exist.
pub fn render_observation_with(
    templates: &TemplateSet,
    state: &WorldState,
    agent: AgentId,
    last_outcome: Option<&ActionOutcome>,
    inbound: &[Message],
) -> Option<Observation> {
    let me = state.agent(agent)?;
    let world = state.world();
    let palette = world.palette();
    let room = me.location;

    let room_bombs: Vec<(BombId, Option<Vec<Color>>)> = state
        .live_bombs_in(room)
        .map(|b| (b.id, me.known_sequences.get(&b.id).cloned()))
        .collect();
    let co_located: Vec<AgentId> = state.agents_in(room).filter(|a| *a != agent).collect();
    let teammate_locations: Vec<(String, RoomId)> = state
        .agents()
        .iter()
        .map(|a| (a.call_sign.clone(), a.location))
        .collect();
    let messages: Vec<Message> = inbound
        .iter()
        .filter(|m| m.sender != agent)
        .cloned()
        .collect();
    let feedback = render_feedback(templates, last_outcome, room, palette);

    let mut text = String::new();
    text.push_str(&format!("Current round: {}\n", state.round()));
    text.push_str(&format!("Total team score: {}.\n", state.score()));
    text.push_str(&format!("Action feedback: {feedback}\n"));

    let teammates = state.agents().len() - 1;
    let company = if co_located.is_empty() {
        String::new()
    } else if co_located.len() == teammates && teammates == 2 {
        " with both of your teammates".to_string()
    } else if co_located.len() == teammates && teammates > 2 {
        " with all of your teammates".to_string()
    } else {
        let names: Vec<String> = co_located
            .iter()
            .map(|a| format!("Player {}", state.agents()[a.0].call_sign))
            .collect();
        format!(" with {}", join_list(&names, "and"))
    };
    text.push_str(&format!(
        "Observation: You are currently in Room {room}{company}."
    ));
    if room_bombs.is_empty() {
        text.push_str(" There is no bomb in the current room.\n");
    } else {
        let found: Vec<String> = room_bombs
            .iter()
            .map(|(id, seq)| match seq {
                Some(seq) => format!("bomb {id} with sequence {}", palette.sequence(seq)),
                None => format!("bomb {id} with unknown sequence"),
            })
            .collect();
        text.push_str(&format!(
            " In the room you also found {}. There is no other bomb in the current room.\n",
            join_list(&found, "and")
        ));
    }
    let locations: Vec<String> = teammate_locations
        .iter()
        .map(|(name, r)| format!("Player {} is in Room {r}", name.to_lowercase()))
        .collect();
    text.push_str(&format!("Teammate Locations: {}.\n", locations.join("; ")));
    if !messages.is_empty() {
        text.push_str("Messages from teammates:\n");
        for m in &messages {
            let sender = state
                .agent(m.sender)
                .map(|a| a.call_sign.as_str())
                .unwrap_or("unknown");
            text.push_str(&format!("Player {sender}: \"{}\"\n", m.text));
        }
    }
    text.push_str("Available action options:\n");
    text.push_str(templates.get("action_menu"));
    text.push('\n');

    Some(Observation {
        round: state.round(),
        score: state.score(),
        agent,
        call_sign: me.call_sign.clone(),
        room,
        feedback,
        room_bombs,
        co_located,
        teammate_locations,
        messages,
        adjacent: world.neighbors(room).to_vec(),
        tools: me.tools.clone(),
        legal_actions: state.legal_actions(agent).ok()?,
        text,
    })
}
