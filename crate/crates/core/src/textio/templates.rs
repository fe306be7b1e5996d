use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::sync::LazyLock;

use thiserror::Error;

macro_rules! builtin {
    ($($name:literal),* $(,)?) => {
        &[$(($name, include_str!(concat!("../../templates/", $name, ".txt")))),*]
    };
}

const BUILTIN: &[(&str, &str)] = builtin![
    "context",
    "action_menu",
    "error_invalid",
    "error_not_adjacent",
    "error_no_bomb_inspect",
    "error_wrong_sequence",
    "error_no_bomb_defuse",
    "error_missing_tool",
    "feedback_first_round",
    "feedback_moved",
    "feedback_inspected",
    "feedback_cut",
    "feedback_defused",
    "feedback_exploded",
    "feedback_wait",
    "tom/introspection_room_contents",
    "tom/introspection_bomb_state",
    "tom/introspection_phase_defused",
    "tom/introspection_bomb_sequence",
    "tom/first_order_room_contents",
    "tom/first_order_bomb_state",
    "tom/first_order_phase_defused",
    "tom/first_order_bomb_sequence",
    "tom/second_order_room_contents",
    "tom/second_order_bomb_state",
    "tom/second_order_phase_defused",
    "tom/second_order_bomb_sequence",
];

static DEFAULT: LazyLock<TemplateSet> = LazyLock::new(|| TemplateSet {
    entries: BUILTIN
        .iter()
        .map(|(k, v)| (k.to_string(), v.trim_end().to_string()))
        .collect(),
});

#[derive(Debug, Error)]
pub enum TemplateError {
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{0} does not override any known template")]
    Unknown(String),
}

/// Named text templates with `{placeholder}` slots.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateSet {
    entries: BTreeMap<String, String>,
}

impl Default for TemplateSet {
    fn default() -> Self {
        Self::builtin().clone()
    }
}

impl TemplateSet {
    pub fn builtin() -> &'static TemplateSet {
        &DEFAULT
    }

    /// Built-in templates overlaid with every `*.txt` under `dir` (and `dir/tom`).
    pub fn from_dir(dir: &Path) -> Result<Self, TemplateError> {
        let mut set = Self::builtin().clone();
        for (sub, prefix) in [(dir.to_path_buf(), ""), (dir.join("tom"), "tom/")] {
            let Ok(listing) = fs::read_dir(&sub) else {
                continue;
            };
            let mut paths: Vec<_> = listing.filter_map(|e| e.ok().map(|e| e.path())).collect();
            paths.sort();
            for path in paths {
                if path.extension().and_then(|e| e.to_str()) != Some("txt") {
                    continue;
                }
                let stem = path
                    .file_stem()
                    .and_then(|s| s.to_str())
                    .unwrap_or_default();
                let name = format!("{prefix}{stem}");
                if !set.entries.contains_key(&name) {
                    return Err(TemplateError::Unknown(path.display().to_string()));
                }
                let text = fs::read_to_string(&path).map_err(|source| TemplateError::Io {
                    path: path.display().to_string(),
                    source,
                })?;
                set.entries.insert(name, text.trim_end().to_string());
            }
        }
        Ok(set)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn get(&self, name: &str) -> &str {
        self.entries.get(name).map(String::as_str).unwrap_or("")
    }

    /// Fills `{key}` slots. Unknown slots are left as they are.
    pub fn fill(&self, name: &str, values: &[(&str, String)]) -> String {
        fill(self.get(name), values)
    }
}

pub fn fill(template: &str, values: &[(&str, String)]) -> String {
    let mut out = String::with_capacity(template.len() + 32);
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        match after.find('}') {
            Some(close) => {
                let key = &after[..close];
                match values.iter().find(|(k, _)| *k == key) {
                    Some((_, v)) => out.push_str(v),
                    None => {
                        out.push('{');
                        out.push_str(key);
                        out.push('}');
                    }
                }
                rest = &after[close + 1..];
            }
            None => {
                out.push_str(&rest[open..]);
                rest = "";
            }
        }
    }
    out.push_str(rest);
    out
}
