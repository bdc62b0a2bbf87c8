//! Turns hourly interest features plus a request time into a single
//! time-aware embedding, under four strategies:
//!
//! * `TimeEncoding` — hour-of-day and day-of-week lookup embeddings, the
//!   discrete baseline. Ignores the interest features entirely.
//! * `Naive` — the feature slot of the current hour only. Discontinuous at
//!   hour boundaries.
//! * `Adaptive` — all 24 hour slots concatenated; slot importance is left to
//!   the downstream model.
//! * `Gaussian` — the 24 hour slots summed with Gaussian weights of the
//!   circular hour distance to the request time. Weights are not normalized:
//!   at sigma = 1 their mass is already within 1e-4 of unit.

use std::fmt;

use crate::embedding::{EmbeddingTables, RowContribution, TableKey};
use crate::error::{Error, Result};
use crate::feature_store::{InterestClockFeatures, TOP_K};
use crate::types::{Facet, SimTime, HOURS_PER_DAY};

/// How request times are quantized before aggregation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TimeMode {
    /// Fractional hours; aggregation weights move continuously with time.
    #[default]
    Continuous,
    /// Hour granularity: the request time is floored to the hour bucket.
    Hourly,
}

impl TimeMode {
    pub fn from_name(name: &str) -> Option<TimeMode> {
        match name {
            "continuous" => Some(TimeMode::Continuous),
            "hourly" => Some(TimeMode::Hourly),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            TimeMode::Continuous => "continuous",
            TimeMode::Hourly => "hourly",
        }
    }
}

/// Request-time view consumed by aggregation: hour of day (possibly
/// fractional) plus the day-of-week index used by the time-encoding baseline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RequestTime {
    pub hour: f64,
    pub day_of_week: usize,
}

impl RequestTime {
    pub fn new(hour: f64, day_of_week: usize) -> Result<RequestTime> {
        if !(0.0..24.0).contains(&hour) || !hour.is_finite() {
            return Err(Error::Domain(format!(
                "request hour must lie in [0, 24), got {hour}"
            )));
        }
        if day_of_week >= 7 {
            return Err(Error::Domain(format!(
                "day-of-week index must lie in [0, 7), got {day_of_week}"
            )));
        }
        Ok(RequestTime { hour, day_of_week })
    }

    pub fn from_sim(ts: SimTime, mode: TimeMode) -> RequestTime {
        let hour = match mode {
            TimeMode::Continuous => ts.fractional_hour(),
            TimeMode::Hourly => ts.hour_bucket() as f64,
        };
        RequestTime {
            hour,
            day_of_week: ts.day_of_week(),
        }
    }

    pub fn hour_bucket(&self) -> usize {
        (self.hour.floor() as usize).min(HOURS_PER_DAY - 1)
    }
}

/// Aggregation strategy for the time-aware embedding.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClockStrategy {
    TimeEncoding,
    Naive,
    Adaptive,
    Gaussian { sigma: f64, mu: f64 },
}

impl ClockStrategy {
    pub fn gaussian(sigma: f64, mu: f64) -> Result<ClockStrategy> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::Config(format!(
                "gaussian sigma must be > 0, got {sigma}"
            )));
        }
        if !mu.is_finite() {
            return Err(Error::Config(format!(
                "gaussian mu must be finite, got {mu}"
            )));
        }
        Ok(ClockStrategy::Gaussian { sigma, mu })
    }

    pub fn name(&self) -> &'static str {
        match self {
            ClockStrategy::TimeEncoding => "time_encoding",
            ClockStrategy::Naive => "naive",
            ClockStrategy::Adaptive => "adaptive",
            ClockStrategy::Gaussian { .. } => "gaussian",
        }
    }

    /// Width of the time-aware block this strategy feeds the model, for a
    /// given embedding dimension.
    pub fn block_width(&self, dim: usize) -> usize {
        match self {
            ClockStrategy::TimeEncoding => 2 * dim,
            ClockStrategy::Naive | ClockStrategy::Gaussian { .. } => 3 * TOP_K * dim,
            ClockStrategy::Adaptive => HOURS_PER_DAY * 3 * TOP_K * dim,
        }
    }
}

impl fmt::Display for ClockStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Circular distance in hours between an hour slot and a request time, in
/// [0, 12]. Symmetric in its arguments.
pub fn circular_distance(hour_slot: usize, cur_time: f64) -> Result<f64> {
    if hour_slot >= HOURS_PER_DAY {
        return Err(Error::Domain(format!(
            "hour slot must lie in [0, 24), got {hour_slot}"
        )));
    }
    if !(0.0..24.0).contains(&cur_time) || !cur_time.is_finite() {
        return Err(Error::Domain(format!(
            "cur_time must lie in [0, 24), got {cur_time}"
        )));
    }
    let t = hour_slot as f64;
    let forward = (t + 24.0 - cur_time).rem_euclid(24.0);
    let backward = (cur_time + 24.0 - t).rem_euclid(24.0);
    Ok(forward.min(backward))
}

/// Gaussian density of the hour distance; strictly positive for all inputs.
pub fn gaussian_weight(delta: f64, sigma: f64, mu: f64) -> f64 {
    let z = (delta - mu) / sigma;
    (-0.5 * z * z).exp() / ((2.0 * std::f64::consts::PI).sqrt() * sigma)
}

/// Gaussian weight of each of the 24 hour slots at the given request hour.
pub fn slot_weights(cur_time: f64, sigma: f64, mu: f64) -> Result<[f64; HOURS_PER_DAY]> {
    let mut weights = [0.0; HOURS_PER_DAY];
    for (t, w) in weights.iter_mut().enumerate() {
        *w = gaussian_weight(circular_distance(t, cur_time)?, sigma, mu);
    }
    Ok(weights)
}

/// The assembled time-aware block: its values, and the per-row contributions
/// that produced them (used by the model to route gradients back into the
/// embedding tables with the same coefficients).
#[derive(Debug, Clone, Default)]
pub struct TimeBlock {
    pub values: Vec<f64>,
    pub contributions: Vec<RowContribution>,
}

fn slot_row(
    features: &InterestClockFeatures,
    hour: usize,
    facet: Facet,
    rank: usize,
) -> (TableKey, usize) {
    match features.slot(hour, facet).get(rank) {
        Some((tag, _)) => (TableKey::Facet(facet), tag.id as usize),
        None => (TableKey::NullTag, 0),
    }
}

/// Assemble the time-aware block for one request.
///
/// Slot layout for the clock strategies is facet-major then rank within each
/// hour: [genre x3, mood x3, language x3], each of `dim` values. Absent slots
/// fall back to the dedicated null-tag embedding.
pub fn time_block(
    features: &InterestClockFeatures,
    req: RequestTime,
    strategy: ClockStrategy,
    tables: &EmbeddingTables,
) -> Result<TimeBlock> {
    let dim = tables.dim();
    let mut block = TimeBlock {
        values: vec![0.0; strategy.block_width(dim)],
        contributions: Vec::new(),
    };
    let add = |block: &mut TimeBlock,
               key: TableKey,
               row: usize,
               offset: usize,
               coeff: f64|
     -> Result<()> {
        let src = tables.lookup(key, row)?;
        for (k, v) in src.iter().enumerate() {
            block.values[offset + k] += coeff * v;
        }
        block.contributions.push(RowContribution {
            table: key,
            row,
            offset,
            coeff,
        });
        Ok(())
    };

    match strategy {
        ClockStrategy::TimeEncoding => {
            add(&mut block, TableKey::Hour, req.hour_bucket(), 0, 1.0)?;
            add(&mut block, TableKey::Day, req.day_of_week, dim, 1.0)?;
        }
        ClockStrategy::Naive => {
            let hour = req.hour_bucket();
            for (f, facet) in Facet::ALL.iter().enumerate() {
                for rank in 0..TOP_K {
                    let (key, row) = slot_row(features, hour, *facet, rank);
                    add(&mut block, key, row, (f * TOP_K + rank) * dim, 1.0)?;
                }
            }
        }
        ClockStrategy::Adaptive => {
            for hour in 0..HOURS_PER_DAY {
                for (f, facet) in Facet::ALL.iter().enumerate() {
                    for rank in 0..TOP_K {
                        let (key, row) = slot_row(features, hour, *facet, rank);
                        let offset = (hour * 3 * TOP_K + f * TOP_K + rank) * dim;
                        add(&mut block, key, row, offset, 1.0)?;
                    }
                }
            }
        }
        ClockStrategy::Gaussian { sigma, mu } => {
            let weights = slot_weights(req.hour, sigma, mu)?;
            for (hour, weight) in weights.iter().enumerate() {
                for (f, facet) in Facet::ALL.iter().enumerate() {
                    for rank in 0..TOP_K {
                        let (key, row) = slot_row(features, hour, *facet, rank);
                        add(&mut block, key, row, (f * TOP_K + rank) * dim, *weight)?;
                    }
                }
            }
        }
    }
    Ok(block)
}

/// The aggregated time-aware embedding for one request: the public face of
/// `time_block` when gradient routing is not needed.
pub fn aggregate(
    features: &InterestClockFeatures,
    req: RequestTime,
    strategy: ClockStrategy,
    tables: &EmbeddingTables,
) -> Result<Vec<f64>> {
    Ok(time_block(features, req, strategy, tables)?.values)
}
