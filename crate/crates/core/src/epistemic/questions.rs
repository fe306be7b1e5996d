use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::log::{EpistemicLog, Proposition, Truth};
use crate::textio::TemplateSet;
use crate::world::{ActionOutcome, AgentId, Effect, RuleError, Verdict};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ToMLevel {
    Introspection,
    FirstOrder,
    SecondOrder,
}

impl ToMLevel {
    pub const ALL: [ToMLevel; 3] = [
        ToMLevel::Introspection,
        ToMLevel::FirstOrder,
        ToMLevel::SecondOrder,
    ];

    fn prefix(self) -> &'static str {
        match self {
            ToMLevel::Introspection => "introspection",
            ToMLevel::FirstOrder => "first_order",
            ToMLevel::SecondOrder => "second_order",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToMQuestion {
    pub id: String,
    pub round: u32,
    pub level: ToMLevel,
    pub asker: AgentId,
    pub target: Option<AgentId>,
    pub proposition: Proposition,
    /// The knowledge chain whose truth answers the question.
    pub chain: Vec<AgentId>,
    pub text: String,
    pub truth: Truth,
}

/// Propositions touched by an outcome, in question order.
pub fn touched_propositions(outcome: &ActionOutcome) -> Vec<Proposition> {
    let mut out = Vec::new();
    match &outcome.verdict {
        Verdict::RuleError(RuleError::NotAdjacent { target, .. }) => {
            out.push(Proposition::RoomContents { room: *target });
        }
        Verdict::RuleError(_) => {}
        Verdict::Ok => {
            for effect in &outcome.effects {
                match effect {
                    Effect::MovedTo { room } => out.push(Proposition::RoomContents { room: *room }),
                    Effect::SequenceRevealed { bomb, .. } => {
                        out.push(Proposition::BombSequence { bomb: *bomb })
                    }
                    Effect::PhaseCut { bomb, .. } => {
                        out.push(Proposition::BombStateChanged {
                            bomb: *bomb,
                            round: outcome.round,
                        });
                        out.push(Proposition::PhaseDefused {
                            round: outcome.round,
                        });
                    }
                    Effect::BombExploded { bomb } => out.push(Proposition::BombStateChanged {
                        bomb: *bomb,
                        round: outcome.round,
                    }),
                    Effect::BombDefused { .. } => {}
                }
            }
        }
    }
    out.dedup();
    out
}

fn template_key(level: ToMLevel, prop: &Proposition) -> Option<String> {
    let suffix = match prop {
        Proposition::RoomContents { .. } => "room_contents",
        Proposition::BombSequence { .. } => "bomb_sequence",
        Proposition::BombStateChanged { .. } => "bomb_state",
        Proposition::PhaseDefused { .. } => "phase_defused",
        Proposition::Location { .. } => return None,
    };
    Some(format!("tom/{}_{suffix}", level.prefix()))
}

fn question_text(
    templates: &TemplateSet,
    level: ToMLevel,
    prop: &Proposition,
    player: Option<&str>,
) -> Option<String> {
    let key = template_key(level, prop)?;
    let mut values = vec![("player", player.unwrap_or_default().to_string())];
    match prop {
        Proposition::RoomContents { room } => values.push(("room", room.to_string())),
        Proposition::BombSequence { bomb } | Proposition::BombStateChanged { bomb, .. } => {
            values.push(("bomb", bomb.to_string()))
        }
        _ => {}
    }
    Some(templates.fill(&key, &values))
}

/// The question battery posed to the acting agent right after its action.
///
/// `call_signs` is indexed by agent. Introspection asks about `[actor]`, first-order about
/// `[teammate]` and second-order about `[teammate, actor]`.
pub fn generate_questions(
    log: &EpistemicLog,
    call_signs: &[String],
    outcome: &ActionOutcome,
    templates: &TemplateSet,
) -> Vec<ToMQuestion> {
    let actor = outcome.agent;
    let teammates: Vec<AgentId> = (0..call_signs.len())
        .map(AgentId)
        .filter(|a| *a != actor)
        .collect();
    let mut out = Vec::new();
    for prop in touched_propositions(outcome) {
        let mut asks: Vec<(ToMLevel, Option<AgentId>, Vec<AgentId>)> =
            vec![(ToMLevel::Introspection, None, vec![actor])];
        asks.extend(
            teammates
                .iter()
                .map(|t| (ToMLevel::FirstOrder, Some(*t), vec![*t])),
        );
        asks.extend(
            teammates
                .iter()
                .map(|t| (ToMLevel::SecondOrder, Some(*t), vec![*t, actor])),
        );
        for (level, target, chain) in asks {
            let name = target.map(|t| call_signs[t.0].as_str());
            let Some(text) = question_text(templates, level, &prop, name) else {
                continue;
            };
            let truth = log.query(&chain, &prop);
            out.push(ToMQuestion {
                id: String::new(),
                round: outcome.round,
                level,
                asker: actor,
                target,
                proposition: prop.clone(),
                chain,
                text,
                truth,
            });
        }
    }
    let sign = call_signs
        .get(actor.0)
        .map(String::as_str)
        .unwrap_or("agent");
    for (i, q) in out.iter_mut().enumerate() {
        q.id = format!("r{}-{}-{}", outcome.round, sign.to_lowercase(), i + 1);
    }
    out
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LevelScore {
    pub correct: usize,
    pub graded: usize,
    pub ambiguous: usize,
}

impl LevelScore {
    /// `None` when every question at this level was ambiguous.
    pub fn accuracy(&self) -> Option<f64> {
        (self.graded > 0).then(|| self.correct as f64 / self.graded as f64)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ToMReport {
    pub introspection: LevelScore,
    pub first_order: LevelScore,
    pub second_order: LevelScore,
}

impl ToMReport {
    pub fn level(&self, level: ToMLevel) -> &LevelScore {
        match level {
            ToMLevel::Introspection => &self.introspection,
            ToMLevel::FirstOrder => &self.first_order,
            ToMLevel::SecondOrder => &self.second_order,
        }
    }

    fn level_mut(&mut self, level: ToMLevel) -> &mut LevelScore {
        match level {
            ToMLevel::Introspection => &mut self.introspection,
            ToMLevel::FirstOrder => &mut self.first_order,
            ToMLevel::SecondOrder => &mut self.second_order,
        }
    }

    /// Adds one graded row. Ambiguous truths only bump the ambiguous count.
    pub fn record(&mut self, level: ToMLevel, truth: Truth, answer: bool) {
        let slot = self.level_mut(level);
        match truth {
            Truth::Ambiguous => slot.ambiguous += 1,
            Truth::Yes | Truth::No => {
                slot.graded += 1;
                if (truth == Truth::Yes) == answer {
                    slot.correct += 1;
                }
            }
        }
    }

    pub fn merge(&mut self, other: &ToMReport) {
        for level in ToMLevel::ALL {
            let o = *other.level(level);
            let s = self.level_mut(level);
            s.correct += o.correct;
            s.graded += o.graded;
            s.ambiguous += o.ambiguous;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{questions} questions but {answers} answers")]
pub struct GradeError {
    pub questions: usize,
    pub answers: usize,
}

/// Per-level accuracy with ambiguous questions excluded from the denominator.
pub fn grade_answers(questions: &[ToMQuestion], answers: &[bool]) -> Result<ToMReport, GradeError> {
    if questions.len() != answers.len() {
        return Err(GradeError {
            questions: questions.len(),
            answers: answers.len(),
        });
    }
    let mut report = ToMReport::default();
    for (q, a) in questions.iter().zip(answers) {
        report.record(q.level, q.truth, *a);
    }
    Ok(report)
}

/// Reads a free-text answer as yes/no. Anything without a leading yes or no counts as no.
pub fn parse_yes_no(text: &str) -> bool {
    let t = text.trim_start().to_lowercase();
    t.starts_with("yes") || t == "y"
}
