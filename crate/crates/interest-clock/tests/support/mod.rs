//! Shared test oracles, independent of the implementation paths they check.
//!
//! * `brute_force_clock` recounts hourly features straight from raw events.
//! * `fd_gradient` measures central finite differences over every model
//!   parameter.
//! * `pairwise_auc` / `pairwise_uauc` are the all-pairs rank statistics.

use interest_clock::feature_store::{InterestClockFeatures, ScoreWeights};
use interest_clock::model::{EventInputs, ScoringModel};
use interest_clock::types::{BehaviorLabels, Facet, InteractionEvent, SimTime, Tag, UserTier};

/// Recompute one user's hourly top-3 features directly from the raw event
/// list: filter to the trailing 30-day window at `watermark`, count the four
/// behaviors per (hour, facet, tag), apply the score weights, sort by score
/// descending then tag ascending, keep three.
pub fn brute_force_clock(
    events: &[InteractionEvent],
    user: u64,
    watermark: SimTime,
    w: &ScoreWeights,
) -> InterestClockFeatures {
    let cutoff = watermark.day_index().saturating_sub(29);
    let mut features = InterestClockFeatures::new();
    for hour in 0..24 {
        for facet in Facet::ALL {
            let mut tallies: Vec<(Tag, u64, u64, u64, u64)> = Vec::new();
            for e in events {
                if e.user_id != user
                    || e.timestamp.day_index() < cutoff
                    || e.timestamp > watermark
                    || e.timestamp.hour_bucket() != hour
                {
                    continue;
                }
                let tag = e.tag(facet);
                let entry = match tallies.iter_mut().find(|(t, ..)| *t == tag) {
                    Some(entry) => entry,
                    None => {
                        tallies.push((tag, 0, 0, 0, 0));
                        tallies.last_mut().unwrap()
                    }
                };
                entry.1 += e.labels.like as u64;
                entry.2 += e.labels.finish as u64;
                entry.3 += e.labels.skip as u64;
                entry.4 += e.labels.dislike as u64;
            }
            if tallies.is_empty() {
                continue;
            }
            let mut scored: Vec<(Tag, f64)> = tallies
                .into_iter()
                .map(|(tag, like, finish, skip, dislike)| {
                    let score = w.alpha * like as f64 + w.beta * finish as f64
                        - w.gamma * skip as f64
                        - w.omega * dislike as f64;
                    (tag, score)
                })
                .collect();
            scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
            scored.truncate(3);
            features.set_slot(hour, facet, scored);
        }
    }
    features
}

/// The 12 valid label combinations (finish and skip are exclusive).
pub fn labels_from_case(case: u8) -> BehaviorLabels {
    let like = case & 1 != 0;
    let dislike = case & 2 != 0;
    let (finish, skip) = match (case >> 2) % 3 {
        0 => (false, false),
        1 => (true, false),
        _ => (false, true),
    };
    BehaviorLabels::new(like, finish, skip, dislike).unwrap()
}

pub fn tier_from(user: u64) -> UserTier {
    match user % 3 {
        0 => UserTier::Low,
        1 => UserTier::Middle,
        _ => UserTier::High,
    }
}

/// Build a valid event from compact raw parts; tags are taken modulo the
/// given vocabulary sizes.
pub fn raw_event(
    user: u64,
    minutes: u64,
    tag_ids: [u16; 3],
    sizes: [usize; 3],
    label_case: u8,
) -> InteractionEvent {
    let tags = [
        Tag {
            facet: Facet::Genre,
            id: tag_ids[0] % sizes[0] as u16,
        },
        Tag {
            facet: Facet::Mood,
            id: tag_ids[1] % sizes[1] as u16,
        },
        Tag {
            facet: Facet::Language,
            id: tag_ids[2] % sizes[2] as u16,
        },
    ];
    InteractionEvent::new(
        user,
        u64::from(tag_ids[0]) * 31 + user,
        SimTime::from_minutes(minutes),
        tags,
        labels_from_case(label_case),
        tier_from(user),
    )
    .unwrap()
}

/// Central finite differences of the sample loss over every parameter.
pub fn fd_gradient(model: &ScoringModel, inputs: &EventInputs, label: bool, eps: f64) -> Vec<f64> {
    let mut m = model.clone();
    let mut out = Vec::with_capacity(m.param_count());
    for i in 0..m.param_count() {
        let orig = m.param(i);
        m.set_param(i, orig + eps);
        let plus = m.loss_at(inputs, label).unwrap();
        m.set_param(i, orig - eps);
        let minus = m.loss_at(inputs, label).unwrap();
        m.set_param(i, orig);
        out.push((plus - minus) / (2.0 * eps));
    }
    out
}

/// True when `analytic` and `numeric` agree within `rel` relative error, with
/// an absolute guard where both are essentially zero.
pub fn gradients_agree(analytic: f64, numeric: f64, rel: f64) -> bool {
    let diff = (analytic - numeric).abs();
    diff <= rel * analytic.abs().max(numeric.abs()) || diff <= 1e-9
}

/// All-pairs AUC: fraction of positive/negative pairs correctly ordered,
/// ties counting one half.
pub fn pairwise_auc(preds: &[(f64, bool)]) -> Option<f64> {
    let pos: Vec<f64> = preds.iter().filter(|(_, y)| *y).map(|(s, _)| *s).collect();
    let neg: Vec<f64> = preds.iter().filter(|(_, y)| !*y).map(|(s, _)| *s).collect();
    if pos.is_empty() || neg.is_empty() {
        return None;
    }
    let mut good = 0.0;
    for p in &pos {
        for n in &neg {
            if p > n {
                good += 1.0;
            } else if p == n {
                good += 0.5;
            }
        }
    }
    Some(good / (pos.len() as f64 * neg.len() as f64))
}

/// Unweighted mean of per-user all-pairs AUC over eligible users.
pub fn pairwise_uauc(preds: &[(u64, f64, bool)]) -> Option<f64> {
    let mut users: Vec<u64> = preds.iter().map(|(u, _, _)| *u).collect();
    users.sort_unstable();
    users.dedup();
    let mut sum = 0.0;
    let mut count = 0usize;
    for user in users {
        let slice: Vec<(f64, bool)> = preds
            .iter()
            .filter(|(u, _, _)| *u == user)
            .map(|(_, s, y)| (*s, *y))
            .collect();
        if let Some(a) = pairwise_auc(&slice) {
            sum += a;
            count += 1;
        }
    }
    (count > 0).then(|| sum / count as f64)
}
