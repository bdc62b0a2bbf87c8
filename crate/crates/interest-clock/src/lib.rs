//! Hour-level time-aware preference modeling for streaming recommendation.
//!
//! The pieces, bottom to top:
//!
//! * [`types`] — events, tags, simulation time, and the event-log format.
//! * [`feature_store`] — per-user hourly behavior counters over a trailing
//!   30-day window, scored and distilled into top-3 tags per hour and facet.
//! * [`clock`] — turns those hourly features plus a request time into one
//!   time-aware embedding (time-encoding baseline, naive, adaptive, or
//!   Gaussian-smoothed aggregation).
//! * [`model`] — embedding tables + a small MLP with manual backprop and
//!   per-coordinate adaptive gradients, trained one sample at a time.
//! * [`sim`] — a synthetic clickstream with ground-truth time-varying
//!   preferences, and the strictly time-ordered streaming training loop.
//! * [`eval`] — AUC/UAUC, per-hour cells, the forgetting probe, and hourly
//!   tag-share reports.
//! * [`pipeline`] — generate/train/evaluate/report/compare stages and their
//!   on-disk formats, shared by the `iclock` CLI.

pub mod clock;
mod codec;
pub mod config;
pub mod embedding;
pub mod error;
pub mod eval;
pub mod feature_store;
pub mod model;
pub mod parallel;
pub mod pipeline;
pub mod sim;
pub mod types;

pub use error::{Error, Result};
