use rayon::prelude::*;
use rayon::ThreadPoolBuilder;

use super::metrics::{summarize, Metrics, Summary};
use super::trial::{run_trial, HarnessError, TrialConfig, TrialOutput};

#[derive(Debug, Clone)]
pub struct BatchOutput {
    /// One entry per seed, in seed order.
    pub trials: Vec<TrialOutput>,
    pub summary: Summary,
}

impl BatchOutput {
    pub fn rows(&self) -> Vec<&Metrics> {
        self.trials.iter().map(|t| &t.metrics).collect()
    }

    /// One JSON object per trial: seed plus its metrics.
    pub fn rows_jsonl(&self) -> String {
        let mut out = String::new();
        for t in &self.trials {
            let row = serde_json::json!({
                "trial_id": t.transcript.header.trial_id,
                "seed": t.transcript.header.seed,
                "metrics": t.metrics,
            });
            out.push_str(&row.to_string());
            out.push('\n');
        }
        out
    }
}

/// Runs one trial per seed on a worker pool. `workers = None` uses every core.
pub fn run_batch(
    config: &TrialConfig,
    seeds: &[u64],
    workers: Option<usize>,
) -> Result<BatchOutput, HarnessError> {
    let run = || -> Result<Vec<TrialOutput>, HarnessError> {
        seeds
            .par_iter()
            .map(|s| run_trial(&config.with_seed(*s)))
            .collect()
    };
    let trials = match workers {
        Some(n) => ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .expect("thread pool")
            .install(run)?,
        None => run()?,
    };
    let metrics: Vec<Metrics> = trials.iter().map(|t| t.metrics.clone()).collect();
    Ok(BatchOutput {
        summary: summarize(&metrics),
        trials,
    })
}
