use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::belief::BeliefScore;
use crate::epistemic::{ToMLevel, ToMReport};
use crate::world::Termination;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub score: u32,
    pub max_score: u32,
    /// Rounds played when every bomb is gone, the round limit otherwise.
    pub rounds: u32,
    pub rounds_played: u32,
    pub replies: usize,
    pub valid_replies: usize,
    pub tom: ToMReport,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub belief: Option<BeliefScore>,
    pub termination: Termination,
}

impl Metrics {
    pub fn valid_action_pct(&self) -> f64 {
        if self.replies == 0 {
            return 100.0;
        }
        100.0 * self.valid_replies as f64 / self.replies as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    /// Sample standard deviation; 0 for a single value.
    pub sd: f64,
    pub n: usize,
}

impl Stat {
    pub fn of(values: &[f64]) -> Option<Stat> {
        let n = values.len();
        if n == 0 {
            return None;
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let sd = if n < 2 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        };
        Some(Stat { mean, sd, n })
    }
}

impl std::fmt::Display for Stat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:.1} +/- {:.1}", self.mean, self.sd)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub trials: usize,
    pub score: Option<Stat>,
    pub rounds: Option<Stat>,
    pub valid_action_pct: Option<Stat>,
    pub introspection: Option<Stat>,
    pub first_order: Option<Stat>,
    pub second_order: Option<Stat>,
    pub belief: Option<Stat>,
}

pub fn summarize(rows: &[Metrics]) -> Summary {
    let col = |f: &dyn Fn(&Metrics) -> Option<f64>| {
        let v: Vec<f64> = rows.iter().filter_map(f).collect();
        Stat::of(&v)
    };
    let tom =
        |level: ToMLevel| col(&|m: &Metrics| m.tom.level(level).accuracy().map(|a| 100.0 * a));
    Summary {
        trials: rows.len(),
        score: col(&|m| Some(m.score as f64)),
        rounds: col(&|m| Some(m.rounds as f64)),
        valid_action_pct: col(&|m| Some(m.valid_action_pct())),
        introspection: tom(ToMLevel::Introspection),
        first_order: tom(ToMLevel::FirstOrder),
        second_order: tom(ToMLevel::SecondOrder),
        belief: col(&|m| {
            m.belief
                .as_ref()
                .and_then(|b| b.overall().accuracy())
                .map(|a| 100.0 * a)
        }),
    }
}

impl Summary {
    /// Two-column ASCII table.
    pub fn table(&self) -> String {
        let rows = [
            ("score", self.score),
            ("rounds", self.rounds),
            ("valid action %", self.valid_action_pct),
            ("ToM introspection %", self.introspection),
            ("ToM first-order %", self.first_order),
            ("ToM second-order %", self.second_order),
            ("belief accuracy %", self.belief),
        ];
        let mut out = String::new();
        let line = format!("+{}+{}+\n", "-".repeat(22), "-".repeat(20));
        out.push_str(&line);
        let _ = writeln!(
            out,
            "| {:<20} | {:>18} |",
            format!("trials: {}", self.trials),
            "mean +/- sd"
        );
        out.push_str(&line);
        for (name, stat) in rows {
            let value = stat.map_or("n/a".to_string(), |s| s.to_string());
            let _ = writeln!(out, "| {name:<20} | {value:>18} |");
        }
        out.push_str(&line);
        out
    }
}
