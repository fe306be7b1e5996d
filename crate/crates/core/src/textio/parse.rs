use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::world::{Action, InvalidReason, Palette, RoomId};

static MOVE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)\bmove\s+to\s+room\s+(\d+)\b").unwrap());
static INSPECT: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)\binspect\s+(?:the\s+|a\s+)?bomb\b").unwrap());
static APPLY: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)\bapply\s+(?:the\s+)?([a-z][a-z0-9_]*)\s+(?:wire[\s-]?cutter\s+)?tool\b")
        .unwrap()
});
static MESSAGE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)message\s+to\s+team\s*:").unwrap());
static DEFAULT_PALETTE: LazyLock<Palette> = LazyLock::new(|| Palette::standard(3));

const OPEN_QUOTES: [char; 2] = ['"', '\u{201c}'];
const CLOSE_QUOTES: [char; 2] = ['"', '\u{201d}'];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedReply {
    pub action: Action,
    pub message: String,
    pub raw: String,
}

/// Parses a reply using the red/green/blue palette.
pub fn parse_reply(raw: &str) -> ParsedReply {
    parse_reply_with(raw, &DEFAULT_PALETTE)
}

/// Keyword matcher. Exactly one distinct action phrase must appear outside the message.
pub fn parse_reply_with(raw: &str, palette: &Palette) -> ParsedReply {
    let (action_text, message) = split_message(raw);
    let mut found: Vec<Action> = Vec::new();
    let mut push = |a: Action| {
        if !found.contains(&a) {
            found.push(a);
        }
    };
    for cap in MOVE.captures_iter(&action_text) {
        if let Ok(id) = cap[1].parse::<u32>() {
            push(Action::Move { room: RoomId(id) });
        }
    }
    if INSPECT.is_match(&action_text) {
        push(Action::Inspect);
    }
    for cap in APPLY.captures_iter(&action_text) {
        if let Some(color) = palette.parse(&cap[1]) {
            push(Action::Apply { color });
        }
    }
    let action = match found.len() {
        0 => Action::Invalid {
            reason: InvalidReason::NoAction,
        },
        1 => found.remove(0),
        _ => Action::Invalid {
            reason: InvalidReason::Ambiguous,
        },
    };
    ParsedReply {
        action,
        message,
        raw: raw.to_string(),
    }
}

/// Separates the team message from the text searched for actions.
fn split_message(raw: &str) -> (String, String) {
    let Some(marker) = MESSAGE.find(raw) else {
        return (raw.to_string(), String::new());
    };
    let before = &raw[..marker.start()];
    let after = raw[marker.end()..].trim_start();
    if let Some(first) = after.chars().next().filter(|c| OPEN_QUOTES.contains(c)) {
        let body = &after[first.len_utf8()..];
        match body.rfind(CLOSE_QUOTES) {
            Some(close) => {
                let quote_len = body[close..].chars().next().map_or(1, char::len_utf8);
                let trailing = &body[close + quote_len..];
                (format!("{before} {trailing}"), body[..close].to_string())
            }
            None => (before.to_string(), body.to_string()),
        }
    } else {
        (before.to_string(), after.trim_end().to_string())
    }
}

/// The fixed phrase for an action, e.g. `Move to Room 5`. `Wait` and `Invalid` have none.
pub fn canonical_phrase(action: &Action, palette: &Palette) -> Option<String> {
    match action {
        Action::Move { room } => Some(format!("Move to Room {room}")),
        Action::Inspect => Some("Inspect Bomb".to_string()),
        Action::Apply { color } => Some(format!("Apply {} Tool", palette.title(*color))),
        Action::Wait | Action::Invalid { .. } => None,
    }
}

/// A reply in the fixed reply format. Actions without a phrase produce an empty selection.
pub fn canonical_reply(action: &Action, message: &str, palette: &Palette) -> String {
    let phrase = canonical_phrase(action, palette).unwrap_or_default();
    if message.is_empty() {
        format!("Action selection: {phrase}.")
    } else {
        format!("Action selection: {phrase}. Message to Team: \"{message}\"")
    }
}
