//! Rule-based text interface: prompts and observations out, free-text replies in.

mod parse;
mod render;
mod templates;

pub use parse::{canonical_phrase, canonical_reply, parse_reply, parse_reply_with, ParsedReply};
pub use render::{
    join_list, map_description, number_word, render_context, render_context_with, render_error,
    render_error_with, render_feedback, render_observation, render_observation_with, Observation,
};
pub use templates::{fill, TemplateError, TemplateSet};
