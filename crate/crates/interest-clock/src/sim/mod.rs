//! Synthetic clickstream generation and the one-pass streaming training loop.

mod generator;
mod runner;

pub use generator::{BumpSpec, Generator, GeneratorConfig, TimeBump, UserProfile};
pub use runner::{
    evaluate_frozen, run_stream, ScoredEvent, StepOutcome, StreamOutcome, StreamTrainer,
    TelemetryRow,
};
