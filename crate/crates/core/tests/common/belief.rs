//! Belief-document checks over whole trials.

use defuse_core::belief::{parse_belief, score_belief};
use defuse_core::harness::{run_trial, EventBody, TrialConfig};
use defuse_core::world::Palette;

/// Problems with the belief documents of one trial: render/parse drift, or known entries
/// that disagree with the final state. Returns the number of documents checked too.
pub fn belief_problems(config: &TrialConfig) -> (usize, Vec<String>) {
    let out = run_trial(config).unwrap();
    let palette = Palette::standard(out.transcript.header.world.n_colors);
    let mut problems = Vec::new();
    let mut docs = 0;
    for e in &out.transcript.events {
        if let EventBody::Belief { doc, text } = &e.body {
            docs += 1;
            if *text != doc.render(&palette) {
                problems.push(format!("event {}: text is not the rendered doc", e.index));
            }
            let parsed = parse_belief(text, &palette);
            if parsed.doc != *doc || !parsed.malformed.is_empty() {
                problems.push(format!("event {}: parse(render(doc)) != doc", e.index));
            }
        }
    }
    if docs == 0 {
        problems.push("no belief documents".into());
    }
    for doc in &out.beliefs {
        let score = score_belief(doc, &out.final_state);
        let overall = score.overall();
        if overall.inconsistent > 0 || !score.hallucinated.is_empty() || overall.consistent == 0 {
            problems.push(format!("{}: {score:?}", doc.role));
        }
    }
    (docs, problems)
}
