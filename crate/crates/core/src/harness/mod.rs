//! Experiment orchestration: instance generation, the trial loop, batches, transcripts and
//! scoring.

mod batch;
mod generate;
mod metrics;
mod tom;
mod transcript;
mod trial;

pub use batch::{run_batch, BatchOutput};
pub use generate::{
    generate_instance, GenError, RandomizationSpec, StartScheme, ToolScheme, CALL_SIGNS,
};
pub use metrics::{summarize, Metrics, Stat, Summary};
pub use tom::{tom_report, Overrides, ToMRow, ToMTable};
pub use transcript::{
    decode_event, EventBody, Transcript, TranscriptError, TranscriptEvent, TranscriptHeader,
    TRANSCRIPT_FORMAT, TRANSCRIPT_VERSION,
};
pub use trial::{
    replay_transcript, run_trial, HarnessError, TrialConfig, TrialOutput, DEFAULT_TURN_TIMEOUT_MS,
};
