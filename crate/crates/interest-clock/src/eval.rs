//! Offline metrics: AUC and UAUC overall, per user tier and per hour; the
//! per-hour forgetting probe; and the hourly tag-share report.
//!
//! AUC is the Mann-Whitney rank statistic (ties count 0.5). UAUC is the
//! unweighted mean of per-user AUC over users with at least one positive and
//! one negative. Cells that lack both classes are reported absent, never
//! fabricated.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::parallel;
use crate::sim::ScoredEvent;
use crate::types::{Facet, InteractionEvent, Tag, UserTier, Vocabulary, HOURS_PER_DAY};

/// Probability that a random positive outranks a random negative, computed
/// via average ranks so tied scores contribute 0.5 per pair.
pub fn auc(predictions: &[(f64, bool)]) -> Result<f64> {
    let n_pos = predictions.iter().filter(|(_, y)| *y).count();
    let n_neg = predictions.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::DegenerateInput(format!(
            "AUC needs both classes, got {n_pos} positives / {n_neg} negatives"
        )));
    }
    let mut order: Vec<usize> = (0..predictions.len()).collect();
    order.sort_unstable_by(|&a, &b| {
        predictions[a]
            .0
            .partial_cmp(&predictions[b].0)
            .expect("scores must not be NaN")
    });

    // Sum of average ranks (1-based) over positives, tie groups share ranks.
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && predictions[order[j + 1]].0 == predictions[order[i]].0 {
            j += 1;
        }
        let avg_rank = (i + 1 + j + 1) as f64 / 2.0;
        for &k in &order[i..=j] {
            if predictions[k].1 {
                rank_sum_pos += avg_rank;
            }
        }
        i = j + 1;
    }
    let n_pos = n_pos as f64;
    Ok((rank_sum_pos - n_pos * (n_pos + 1.0) / 2.0) / (n_pos * n_neg as f64))
}

/// Unweighted mean of per-user AUC over eligible users.
pub fn uauc(predictions: &[(u64, f64, bool)]) -> Result<f64> {
    let mut by_user: BTreeMap<u64, Vec<(f64, bool)>> = BTreeMap::new();
    for (user, score, label) in predictions {
        by_user.entry(*user).or_default().push((*score, *label));
    }
    let groups: Vec<Vec<(f64, bool)>> = by_user.into_values().collect();
    let per_user = parallel::map(&groups, |preds| auc(preds).ok());
    let eligible: Vec<f64> = per_user.into_iter().flatten().collect();
    if eligible.is_empty() {
        return Err(Error::DegenerateInput(
            "UAUC needs at least one user with both classes".into(),
        ));
    }
    Ok(eligible.iter().sum::<f64>() / eligible.len() as f64)
}

/// AUC per hour bucket; `None` where a bucket lacks one of the classes.
pub fn per_hour_auc(predictions: &[(usize, f64, bool)]) -> [Option<f64>; HOURS_PER_DAY] {
    let hours: Vec<usize> = (0..HOURS_PER_DAY).collect();
    let cells = parallel::map(&hours, |h| {
        let slice: Vec<(f64, bool)> = predictions
            .iter()
            .filter(|(hour, _, _)| hour == h)
            .map(|(_, s, y)| (*s, *y))
            .collect();
        auc(&slice).ok()
    });
    let mut out = [None; HOURS_PER_DAY];
    for (h, cell) in cells.into_iter().enumerate() {
        out[h] = cell;
    }
    out
}

/// Max minus min of the present per-hour AUC cells; `None` when fewer than
/// two cells are present.
pub fn forgetting_spread(per_hour: &[Option<f64>; HOURS_PER_DAY]) -> Option<f64> {
    let present: Vec<f64> = per_hour.iter().flatten().copied().collect();
    if present.len() < 2 {
        return None;
    }
    let max = present.iter().cloned().fold(f64::MIN, f64::max);
    let min = present.iter().cloned().fold(f64::MAX, f64::min);
    Some(max - min)
}

/// Per-hour forgetting probe over frozen predictions: each held-out event is
/// bucketed by its hour, and each bucket's AUC measures how well the final
/// checkpoint still serves that time of day.
pub fn forgetting_probe(scored: &[ScoredEvent]) -> [Option<f64>; HOURS_PER_DAY] {
    let tuples: Vec<(usize, f64, bool)> =
        scored.iter().map(|s| (s.hour, s.score, s.label)).collect();
    per_hour_auc(&tuples)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TierMetrics {
    pub n: usize,
    pub auc: Option<f64>,
    pub uauc: Option<f64>,
    /// Users eligible for this tier's UAUC.
    pub uauc_users: usize,
}

/// The full offline report for one strategy's predictions.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub n: usize,
    pub auc: Option<f64>,
    pub uauc: Option<f64>,
    /// Number of users eligible for UAUC.
    pub uauc_users: usize,
    pub per_tier: [TierMetrics; 3],
    pub per_hour: [Option<f64>; HOURS_PER_DAY],
    pub per_hour_n: [usize; HOURS_PER_DAY],
}

/// Users holding at least one positive and one negative sample.
fn count_eligible_users<'a>(scored: impl Iterator<Item = &'a ScoredEvent>) -> usize {
    let mut by: BTreeMap<u64, (bool, bool)> = BTreeMap::new();
    for s in scored {
        let e = by.entry(s.user_id).or_default();
        e.0 |= s.label;
        e.1 |= !s.label;
    }
    by.values().filter(|(p, n)| *p && *n).count()
}

pub fn compute_report(scored: &[ScoredEvent]) -> MetricsReport {
    let overall: Vec<(f64, bool)> = scored.iter().map(|s| (s.score, s.label)).collect();
    let by_user: Vec<(u64, f64, bool)> = scored
        .iter()
        .map(|s| (s.user_id, s.score, s.label))
        .collect();
    let hours: Vec<(usize, f64, bool)> =
        scored.iter().map(|s| (s.hour, s.score, s.label)).collect();
    let eligible_users = count_eligible_users(scored.iter());

    let mut per_tier = [TierMetrics::default(); 3];
    for tier in UserTier::ALL {
        let slice: Vec<&ScoredEvent> = scored.iter().filter(|s| s.tier == tier).collect();
        let preds: Vec<(f64, bool)> = slice.iter().map(|s| (s.score, s.label)).collect();
        let users: Vec<(u64, f64, bool)> = slice
            .iter()
            .map(|s| (s.user_id, s.score, s.label))
            .collect();
        per_tier[tier.index()] = TierMetrics {
            n: slice.len(),
            auc: auc(&preds).ok(),
            uauc: uauc(&users).ok(),
            uauc_users: count_eligible_users(slice.iter().copied()),
        };
    }

    let mut per_hour_n = [0usize; HOURS_PER_DAY];
    for s in scored {
        per_hour_n[s.hour] += 1;
    }

    MetricsReport {
        n: scored.len(),
        auc: auc(&overall).ok(),
        uauc: uauc(&by_user).ok(),
        uauc_users: eligible_users,
        per_tier,
        per_hour: per_hour_auc(&hours),
        per_hour_n,
    }
}

/// Hourly tag shares: per hour, each tag's percentage of that hour's
/// impressions. Rows sum to 100 except for hours without impressions, which
/// are absent.
#[derive(Debug, Clone, PartialEq)]
pub struct HourDistributionReport {
    pub facet: Facet,
    pub rows: [Option<Vec<(Tag, f64)>>; HOURS_PER_DAY],
}

impl HourDistributionReport {
    pub fn share(&self, hour: usize, tag: Tag) -> Option<f64> {
        self.rows[hour]
            .as_ref()?
            .iter()
            .find(|(t, _)| *t == tag)
            .map(|(_, p)| *p)
    }
}

pub fn hour_distribution(
    events: &[InteractionEvent],
    facet: Facet,
    vocab: &Vocabulary,
) -> Result<HourDistributionReport> {
    if events.is_empty() {
        return Err(Error::EmptyInput(
            "hour distribution of an empty stream".into(),
        ));
    }
    let mut counts = vec![[0u64; HOURS_PER_DAY]; vocab.size(facet)];
    let mut totals = [0u64; HOURS_PER_DAY];
    for e in events {
        let h = e.timestamp.hour_bucket();
        counts[e.tag(facet).id as usize][h] += 1;
        totals[h] += 1;
    }
    let mut rows: [Option<Vec<(Tag, f64)>>; HOURS_PER_DAY] = std::array::from_fn(|_| None);
    for h in 0..HOURS_PER_DAY {
        if totals[h] == 0 {
            continue;
        }
        let row: Vec<(Tag, f64)> = vocab
            .tags(facet)
            .map(|tag| {
                (
                    tag,
                    100.0 * counts[tag.id as usize][h] as f64 / totals[h] as f64,
                )
            })
            .collect();
        rows[h] = Some(row);
    }
    Ok(HourDistributionReport { facet, rows })
}
