use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::transcript::{EventBody, Transcript};
use crate::epistemic::{ToMLevel, ToMQuestion, ToMReport, Truth};

/// One graded question.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToMRow {
    pub trial_id: String,
    pub question_id: String,
    pub round: u32,
    pub level: ToMLevel,
    /// Ground truth after overrides.
    pub truth: Truth,
    /// What the oracle said.
    pub oracle_truth: Truth,
    pub answer_text: String,
    pub answer: bool,
    pub overridden: bool,
}

impl ToMRow {
    pub fn correct(&self) -> Option<bool> {
        match self.truth {
            Truth::Ambiguous => None,
            t => Some((t == Truth::Yes) == self.answer),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToMTable {
    pub rows: Vec<ToMRow>,
    pub report: ToMReport,
}

/// Manual ground truth: question id, or `trial_id/question_id`, to yes, no or ambiguous.
/// The qualified key wins.
pub type Overrides = BTreeMap<String, Truth>;

/// Re-grades every question/answer pair in the transcripts.
pub fn tom_report(transcripts: &[Transcript], overrides: &Overrides) -> ToMTable {
    let mut rows = Vec::new();
    let mut report = ToMReport::default();
    for t in transcripts {
        let trial_id = &t.header.trial_id;
        let mut pending: BTreeMap<&str, &ToMQuestion> = BTreeMap::new();
        for e in &t.events {
            match &e.body {
                EventBody::TomQuestion { question } => {
                    pending.insert(&question.id, question);
                }
                EventBody::TomAnswer {
                    question_id,
                    text,
                    yes,
                } => {
                    let Some(q) = pending.remove(question_id.as_str()) else {
                        continue;
                    };
                    let manual = overrides
                        .get(&format!("{trial_id}/{question_id}"))
                        .or_else(|| overrides.get(question_id));
                    let truth = manual.copied().unwrap_or(q.truth);
                    report.record(q.level, truth, *yes);
                    rows.push(ToMRow {
                        trial_id: trial_id.clone(),
                        question_id: question_id.clone(),
                        round: q.round,
                        level: q.level,
                        truth,
                        oracle_truth: q.truth,
                        answer_text: text.clone(),
                        answer: *yes,
                        overridden: truth != q.truth,
                    });
                }
                _ => {}
            }
        }
    }
    ToMTable { rows, report }
}

impl ToMTable {
    pub fn table(&self) -> String {
        let line = format!(
            "+{}+{}+{}+{}+\n",
            "-".repeat(15),
            "-".repeat(10),
            "-".repeat(9),
            "-".repeat(11)
        );
        let mut out = line.clone();
        let _ = writeln!(
            out,
            "| {:<13} | {:>8} | {:>7} | {:>9} |",
            "level", "accuracy", "graded", "ambiguous"
        );
        out.push_str(&line);
        for level in ToMLevel::ALL {
            let s = self.report.level(level);
            let acc = s
                .accuracy()
                .map_or("n/a".to_string(), |a| format!("{:.1}%", 100.0 * a));
            let name = match level {
                ToMLevel::Introspection => "introspection",
                ToMLevel::FirstOrder => "first-order",
                ToMLevel::SecondOrder => "second-order",
            };
            let _ = writeln!(
                out,
                "| {name:<13} | {acc:>8} | {:>7} | {:>9} |",
                s.graded, s.ambiguous
            );
        }
        out.push_str(&line);
        out
    }
}
