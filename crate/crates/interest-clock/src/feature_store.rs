//! Per-user, per-hour tag counters over a trailing 30-day window, and the
//! hourly top-3 feature extraction built on them.
//!
//! Counters are sharded per (day, hour) so window expiry is exact: dropping a
//! shard removes exactly the events of that day. `extract_clock` additionally
//! filters by the current watermark at read time, so its output equals a
//! brute-force recount over in-window raw events no matter when `expire` was
//! last called — `expire` only reclaims memory.

use std::collections::{BTreeMap, HashMap};
use std::io::{Read, Write};
use std::path::Path;

use crate::codec;
use crate::error::{Error, Result};
use crate::types::{Facet, InteractionEvent, SimTime, Tag, HOURS_PER_DAY};

/// Trailing window length, in days.
pub const WINDOW_DAYS: u64 = 30;

/// Number of tags kept per (hour, facet) slot.
pub const TOP_K: usize = 3;

const SNAPSHOT_MAGIC: &[u8] = b"ICLK1";

/// Behavior counters for one (user, hour, tag) cell. `seen` counts all events
/// regardless of labels, so tags whose every counter is zero still register
/// as present.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TagCounters {
    pub seen: u32,
    pub like: u32,
    pub finish: u32,
    pub skip: u32,
    pub dislike: u32,
}

impl TagCounters {
    fn absorb(&mut self, other: &TagCounters) {
        self.seen += other.seen;
        self.like += other.like;
        self.finish += other.finish;
        self.skip += other.skip;
        self.dislike += other.dislike;
    }
}

/// Weights of the linear behavior score. All four are non-negative; the skip
/// and dislike terms enter with a minus sign.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreWeights {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub omega: f64,
}

impl ScoreWeights {
    pub fn new(alpha: f64, beta: f64, gamma: f64, omega: f64) -> Result<ScoreWeights> {
        for (name, v) in [
            ("alpha", alpha),
            ("beta", beta),
            ("gamma", gamma),
            ("omega", omega),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Config(format!(
                    "score weight {name} must be finite and >= 0, got {v}"
                )));
            }
        }
        Ok(ScoreWeights {
            alpha,
            beta,
            gamma,
            omega,
        })
    }
}

impl Default for ScoreWeights {
    /// Explicit feedback (like/dislike) weighted above implicit (finish/skip).
    fn default() -> Self {
        ScoreWeights {
            alpha: 2.0,
            beta: 1.0,
            gamma: 1.0,
            omega: 2.0,
        }
    }
}

/// score = alpha*like + beta*finish - gamma*skip - omega*dislike.
/// May be negative; negative-score tags stay eligible for the top 3.
pub fn score_feature(c: &TagCounters, w: &ScoreWeights) -> f64 {
    w.alpha * c.like as f64 + w.beta * c.finish as f64
        - w.gamma * c.skip as f64
        - w.omega * c.dislike as f64
}

/// Per-user hourly features: for each hour and facet, up to three (tag, score)
/// pairs in descending score order, ties broken by tag value ascending.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct InterestClockFeatures {
    slots: [[Vec<(Tag, f64)>; 3]; HOURS_PER_DAY],
}

impl InterestClockFeatures {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn slot(&self, hour: usize, facet: Facet) -> &[(Tag, f64)] {
        &self.slots[hour][facet.index()]
    }

    pub fn set_slot(&mut self, hour: usize, facet: Facet, entries: Vec<(Tag, f64)>) {
        assert!(entries.len() <= TOP_K, "at most {TOP_K} entries per slot");
        debug_assert!(entries.iter().all(|(t, _)| t.facet == facet));
        self.slots[hour][facet.index()] = entries;
    }

    pub fn is_empty(&self) -> bool {
        self.slots
            .iter()
            .all(|h| h.iter().all(|slot| slot.is_empty()))
    }
}

/// Sort scored tags in place: score descending, tag id ascending on ties.
/// Ids follow vocabulary name order, so this is "tag value ascending".
pub fn sort_scored_tags(entries: &mut Vec<(Tag, f64)>) {
    entries.sort_unstable_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .expect("scores are finite")
            .then(a.0.cmp(&b.0))
    });
}

type FacetCells = [Vec<(u16, TagCounters)>; 3];

#[derive(Debug, Clone, Default)]
struct HourCell {
    facets: FacetCells,
}

impl HourCell {
    fn bump(&mut self, facet: usize, tag: u16, event: &InteractionEvent) {
        let cells = &mut self.facets[facet];
        let counters = match cells.iter_mut().find(|(t, _)| *t == tag) {
            Some((_, c)) => c,
            None => {
                cells.push((tag, TagCounters::default()));
                &mut cells.last_mut().unwrap().1
            }
        };
        counters.seen += 1;
        counters.like += event.labels.like as u32;
        counters.finish += event.labels.finish as u32;
        counters.skip += event.labels.skip as u32;
        counters.dislike += event.labels.dislike as u32;
    }
}

#[derive(Debug, Clone, Default)]
struct UserHistory {
    /// (day, hour) -> counters. BTreeMap keeps shards day-ordered so expiry
    /// is a single range split.
    cells: BTreeMap<(u64, u8), HourCell>,
}

/// The windowed counter store. Single writer (ingest/expire), any number of
/// readers between writes.
#[derive(Debug, Clone, Default)]
pub struct FeatureStore {
    users: HashMap<u64, UserHistory>,
    watermark: Option<SimTime>,
}

impl FeatureStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn watermark(&self) -> Option<SimTime> {
        self.watermark
    }

    pub fn user_count(&self) -> usize {
        self.users.len()
    }

    /// First day still inside the trailing window for the given watermark.
    fn cutoff_day(watermark: SimTime) -> u64 {
        watermark.day_index().saturating_sub(WINDOW_DAYS - 1)
    }

    /// Record one event. Events must arrive in nondecreasing timestamp order.
    pub fn ingest(&mut self, event: &InteractionEvent) -> Result<()> {
        if let Some(wm) = self.watermark {
            if event.timestamp < wm {
                return Err(Error::OutOfOrderEvent {
                    line: None,
                    event_minutes: event.timestamp.epoch_minutes(),
                    watermark_minutes: wm.epoch_minutes(),
                });
            }
        }
        self.watermark = Some(event.timestamp);
        let day = event.timestamp.day_index();
        let hour = event.timestamp.hour_bucket() as u8;
        let cell = self
            .users
            .entry(event.user_id)
            .or_default()
            .cells
            .entry((day, hour))
            .or_default();
        for facet in Facet::ALL {
            cell.bump(facet.index(), event.tag(facet).id, event);
        }
        Ok(())
    }

    /// Drop all day shards older than the trailing window relative to
    /// `watermark`, and advance the watermark if `watermark` is newer.
    pub fn expire(&mut self, watermark: SimTime) {
        if self.watermark.map_or(true, |wm| watermark > wm) {
            self.watermark = Some(watermark);
        }
        let cutoff = Self::cutoff_day(watermark);
        self.users.retain(|_, history| {
            // split_off keeps keys >= the boundary in the returned map.
            history.cells = history.cells.split_off(&(cutoff, 0));
            !history.cells.is_empty()
        });
    }

    /// Top-3 tags per (hour, facet) for one user, over the trailing window.
    /// Users or hours without in-window events yield empty slots.
    pub fn extract_clock(&self, user_id: u64, weights: &ScoreWeights) -> InterestClockFeatures {
        let mut features = InterestClockFeatures::new();
        let (history, wm) = match (self.users.get(&user_id), self.watermark) {
            (Some(h), Some(wm)) => (h, wm),
            _ => return features,
        };
        let cutoff = Self::cutoff_day(wm);

        let mut merged: [[Vec<(u16, TagCounters)>; 3]; HOURS_PER_DAY] = Default::default();
        for ((_, hour), cell) in history.cells.range((cutoff, 0)..) {
            for f in 0..3 {
                let target = &mut merged[*hour as usize][f];
                for (tag, counters) in &cell.facets[f] {
                    match target.iter_mut().find(|(t, _)| t == tag) {
                        Some((_, acc)) => acc.absorb(counters),
                        None => target.push((*tag, *counters)),
                    }
                }
            }
        }

        for (hour, by_facet) in merged.iter().enumerate() {
            for facet in Facet::ALL {
                let cells = &by_facet[facet.index()];
                if cells.is_empty() {
                    continue;
                }
                let mut scored: Vec<(Tag, f64)> = cells
                    .iter()
                    .map(|(id, c)| (Tag { facet, id: *id }, score_feature(c, weights)))
                    .collect();
                sort_scored_tags(&mut scored);
                scored.truncate(TOP_K);
                features.set_slot(hour, facet, scored);
            }
        }
        features
    }

    /// All user ids currently holding history, sorted.
    pub fn user_ids(&self) -> Vec<u64> {
        let mut ids: Vec<u64> = self.users.keys().copied().collect();
        ids.sort_unstable();
        ids
    }

    // -- snapshot ----------------------------------------------------------

    pub fn snapshot<W: Write>(&self, w: &mut W) -> Result<()> {
        w.write_all(SNAPSHOT_MAGIC)?;
        match self.watermark {
            Some(wm) => {
                codec::write_u8(w, 1)?;
                codec::write_u64(w, wm.epoch_minutes())?;
            }
            None => {
                codec::write_u8(w, 0)?;
                codec::write_u64(w, 0)?;
            }
        }
        let ids = self.user_ids();
        codec::write_u32(w, ids.len() as u32)?;
        for id in ids {
            let history = &self.users[&id];
            codec::write_u64(w, id)?;
            codec::write_u32(w, history.cells.len() as u32)?;
            for ((day, hour), cell) in &history.cells {
                codec::write_u64(w, *day)?;
                codec::write_u8(w, *hour)?;
                for f in 0..3 {
                    codec::write_u16(w, cell.facets[f].len() as u16)?;
                    for (tag, c) in &cell.facets[f] {
                        codec::write_u16(w, *tag)?;
                        for v in [c.seen, c.like, c.finish, c.skip, c.dislike] {
                            codec::write_u32(w, v)?;
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn restore<R: Read>(r: &mut R) -> Result<FeatureStore> {
        codec::expect_magic(r, SNAPSHOT_MAGIC)?;
        let has_wm = codec::read_u8(r, "watermark flag")?;
        let wm_minutes = codec::read_u64(r, "watermark")?;
        let watermark = match has_wm {
            0 => None,
            1 => Some(SimTime::from_minutes(wm_minutes)),
            other => {
                return Err(Error::CorruptSnapshot(format!(
                    "watermark flag must be 0 or 1, got {other}"
                )))
            }
        };
        let n_users = codec::read_u32(r, "user count")?;
        let mut users = HashMap::with_capacity(n_users as usize);
        for _ in 0..n_users {
            let id = codec::read_u64(r, "user id")?;
            let n_cells = codec::read_u32(r, "cell count")?;
            let mut history = UserHistory::default();
            for _ in 0..n_cells {
                let day = codec::read_u64(r, "day")?;
                let hour = codec::read_u8(r, "hour")?;
                if hour as usize >= HOURS_PER_DAY {
                    return Err(Error::CorruptSnapshot(format!("hour {hour} out of range")));
                }
                let mut cell = HourCell::default();
                for f in 0..3 {
                    let n_tags = codec::read_u16(r, "tag count")?;
                    for _ in 0..n_tags {
                        let tag = codec::read_u16(r, "tag id")?;
                        let mut c = TagCounters::default();
                        for v in [
                            &mut c.seen,
                            &mut c.like,
                            &mut c.finish,
                            &mut c.skip,
                            &mut c.dislike,
                        ] {
                            *v = codec::read_u32(r, "counter")?;
                        }
                        cell.facets[f].push((tag, c));
                    }
                }
                if history.cells.insert((day, hour), cell).is_some() {
                    return Err(Error::CorruptSnapshot(format!(
                        "duplicate shard (day {day}, hour {hour})"
                    )));
                }
            }
            if users.insert(id, history).is_some() {
                return Err(Error::CorruptSnapshot(format!("duplicate user {id}")));
            }
        }
        Ok(FeatureStore { users, watermark })
    }

    pub fn snapshot_to_path(&self, path: &Path) -> Result<()> {
        let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.snapshot(&mut file)
    }

    pub fn restore_from_path(path: &Path) -> Result<FeatureStore> {
        let mut file = std::io::BufReader::new(std::fs::File::open(path)?);
        Self::restore(&mut file)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{BehaviorLabels, UserTier, Vocabulary};

    fn vocab() -> Vocabulary {
        Vocabulary::synthetic([10, 8, 6]).unwrap()
    }

    fn event(
        vocab: &Vocabulary,
        user: u64,
        minutes: u64,
        names: [&str; 3],
        labels: (bool, bool, bool, bool),
    ) -> InteractionEvent {
        InteractionEvent::new(
            user,
            7,
            SimTime::from_minutes(minutes),
            [
                vocab.resolve(Facet::Genre, names[0]).unwrap(),
                vocab.resolve(Facet::Mood, names[1]).unwrap(),
                vocab.resolve(Facet::Language, names[2]).unwrap(),
            ],
            BehaviorLabels::new(labels.0, labels.1, labels.2, labels.3).unwrap(),
            UserTier::Low,
        )
        .unwrap()
    }

    fn counters_for(store: &FeatureStore, user: u64, hour: usize, facet: Facet, name: &str) -> f64 {
        let feats = store.extract_clock(user, &ScoreWeights::new(1.0, 1.0, 1.0, 1.0).unwrap());
        let vocab = vocab();
        feats
            .slot(hour, facet)
            .iter()
            .find(|(t, _)| vocab.name(*t) == name)
            .map(|(_, s)| *s)
            .unwrap_or(f64::NAN)
    }

    #[test]
    fn score_feature_examples() {
        let w = ScoreWeights::new(1.0, 1.0, 1.0, 1.0).unwrap();
        let c = TagCounters {
            seen: 6,
            like: 2,
            finish: 3,
            skip: 1,
            dislike: 0,
        };
        assert_eq!(score_feature(&c, &w), 4.0);
        assert_eq!(score_feature(&TagCounters::default(), &w), 0.0);
        let w = ScoreWeights::new(2.0, 0.5, 1.0, 3.0).unwrap();
        let c = TagCounters {
            seen: 8,
            like: 1,
            finish: 4,
            skip: 2,
            dislike: 1,
        };
        assert_eq!(score_feature(&c, &w), -1.0);
    }

    #[test]
    fn score_is_linear_in_weights() {
        let w1 = ScoreWeights::new(2.0, 1.0, 0.5, 3.0).unwrap();
        let w2 = ScoreWeights::new(0.25, 2.0, 1.5, 0.0).unwrap();
        let sum = ScoreWeights::new(2.25, 3.0, 2.0, 3.0).unwrap();
        let c = TagCounters {
            seen: 20,
            like: 5,
            finish: 9,
            skip: 4,
            dislike: 2,
        };
        let lhs = score_feature(&c, &sum);
        let rhs = score_feature(&c, &w1) + score_feature(&c, &w2);
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn score_monotonicity() {
        let w = ScoreWeights::default();
        let base = TagCounters {
            seen: 4,
            like: 1,
            finish: 2,
            skip: 1,
            dislike: 0,
        };
        let mut more_likes = base;
        more_likes.like += 1;
        assert!(score_feature(&more_likes, &w) > score_feature(&base, &w));
        let mut more_skips = base;
        more_skips.skip += 1;
        assert!(score_feature(&more_skips, &w) < score_feature(&base, &w));
    }

    #[test]
    fn ingest_counts_labels_per_tag() {
        let v = vocab();
        let mut store = FeatureStore::new();
        store
            .ingest(&event(
                &v,
                1,
                500,
                ["pop", "happy", "english"],
                (true, true, false, false),
            ))
            .unwrap();
        // like=1, finish=1 on each of the event's three tags
        assert_eq!(counters_for(&store, 1, 8, Facet::Genre, "pop"), 2.0);
        assert_eq!(counters_for(&store, 1, 8, Facet::Mood, "happy"), 2.0);
        assert_eq!(counters_for(&store, 1, 8, Facet::Language, "english"), 2.0);
    }

    #[test]
    fn all_false_event_registers_presence() {
        let v = vocab();
        let mut store = FeatureStore::new();
        store
            .ingest(&event(
                &v,
                1,
                500,
                ["pop", "happy", "english"],
                (false, false, false, false),
            ))
            .unwrap();
        let feats = store.extract_clock(1, &ScoreWeights::default());
        let slot = feats.slot(8, Facet::Genre);
        assert_eq!(slot.len(), 1);
        assert_eq!(slot[0].1, 0.0);
    }

    #[test]
    fn repeated_skips_accumulate() {
        let v = vocab();
        let mut store = FeatureStore::new();
        for minutes in [500, 510] {
            store
                .ingest(&event(
                    &v,
                    1,
                    minutes,
                    ["pop", "happy", "english"],
                    (false, false, true, false),
                ))
                .unwrap();
        }
        // score with unit weights = -cnt_skip = -2
        assert_eq!(counters_for(&store, 1, 8, Facet::Genre, "pop"), -2.0);
    }

    #[test]
    fn out_of_order_ingest_rejected() {
        let v = vocab();
        let mut store = FeatureStore::new();
        store
            .ingest(&event(
                &v,
                1,
                500,
                ["pop", "happy", "english"],
                (false, false, false, false),
            ))
            .unwrap();
        let err = store
            .ingest(&event(
                &v,
                1,
                499,
                ["pop", "happy", "english"],
                (false, false, false, false),
            ))
            .unwrap_err();
        assert!(matches!(err, Error::OutOfOrderEvent { .. }));
    }

    #[test]
    fn window_expiry_examples() {
        let v = vocab();
        let day = |d: u64| d * 1440 + 500;

        // single event at day 0; watermark day 31 -> gone
        let mut store = FeatureStore::new();
        store
            .ingest(&event(
                &v,
                1,
                day(0),
                ["pop", "happy", "english"],
                (true, false, false, false),
            ))
            .unwrap();
        store.expire(SimTime::from_minutes(day(31)));
        assert!(store.extract_clock(1, &ScoreWeights::default()).is_empty());

        // event at day 5; watermark day 34 -> still contributes (34-5 < 30)
        let mut store = FeatureStore::new();
        store
            .ingest(&event(
                &v,
                1,
                day(5),
                ["pop", "happy", "english"],
                (true, false, false, false),
            ))
            .unwrap();
        store.expire(SimTime::from_minutes(day(34)));
        assert!(!store.extract_clock(1, &ScoreWeights::default()).is_empty());

        // events on days 0 and 20, watermark day 31 -> only day 20 remains
        let mut store = FeatureStore::new();
        store
            .ingest(&event(
                &v,
                1,
                day(0),
                ["pop", "happy", "english"],
                (true, false, false, false),
            ))
            .unwrap();
        store
            .ingest(&event(
                &v,
                1,
                day(20),
                ["rock", "calm", "french"],
                (true, false, false, false),
            ))
            .unwrap();
        store.expire(SimTime::from_minutes(day(31)));
        let feats = store.extract_clock(1, &ScoreWeights::default());
        assert_eq!(feats.slot(8, Facet::Genre).len(), 1);
        assert_eq!(vocab().name(feats.slot(8, Facet::Genre)[0].0), "rock");
    }

    #[test]
    fn window_applies_at_read_time_without_expire() {
        let v = vocab();
        let day = |d: u64| d * 1440 + 500;
        let mut store = FeatureStore::new();
        store
            .ingest(&event(
                &v,
                1,
                day(0),
                ["pop", "happy", "english"],
                (true, false, false, false),
            ))
            .unwrap();
        store
            .ingest(&event(
                &v,
                1,
                day(31),
                ["rock", "calm", "french"],
                (true, false, false, false),
            ))
            .unwrap();
        // no expire() call; the day-0 event must still be invisible
        let feats = store.extract_clock(1, &ScoreWeights::default());
        assert!(feats
            .slot(8, Facet::Genre)
            .iter()
            .all(|(t, _)| v.name(*t) != "pop"));
    }

    #[test]
    fn extract_only_touched_hours() {
        let v = vocab();
        let mut store = FeatureStore::new();
        store
            .ingest(&event(
                &v,
                1,
                8 * 60 + 5,
                ["pop", "happy", "english"],
                (true, false, false, false),
            ))
            .unwrap();
        let feats = store.extract_clock(1, &ScoreWeights::default());
        for hour in 0..HOURS_PER_DAY {
            for facet in Facet::ALL {
                if hour == 8 {
                    assert!(!feats.slot(hour, facet).is_empty());
                } else {
                    assert!(feats.slot(hour, facet).is_empty());
                }
            }
        }
    }

    #[test]
    fn top3_keeps_three_highest_scores() {
        let v = vocab();
        let mut store = FeatureStore::new();
        let genres = ["pop", "rock", "jazz", "folk", "dance"];
        // genre g_i gets i+1 likes -> distinct scores
        let mut minutes = 500;
        for (i, g) in genres.iter().enumerate() {
            for _ in 0..=i {
                store
                    .ingest(&event(
                        &v,
                        1,
                        minutes,
                        [g, "happy", "english"],
                        (true, false, false, false),
                    ))
                    .unwrap();
                minutes += 1;
            }
        }
        let feats = store.extract_clock(1, &ScoreWeights::default());
        let slot = feats.slot(8, Facet::Genre);
        assert_eq!(slot.len(), 3);
        let names: Vec<&str> = slot.iter().map(|(t, _)| v.name(*t)).collect();
        assert_eq!(names, ["dance", "folk", "jazz"]);
        assert!(slot[0].1 > slot[1].1 && slot[1].1 > slot[2].1);
    }

    #[test]
    fn ties_break_by_tag_value_ascending() {
        let v = vocab();
        let mut store = FeatureStore::new();
        // "rock" then "pop": equal scores, "pop" < "rock" lexicographically
        store
            .ingest(&event(
                &v,
                1,
                500,
                ["rock", "happy", "english"],
                (true, false, false, false),
            ))
            .unwrap();
        store
            .ingest(&event(
                &v,
                1,
                501,
                ["pop", "happy", "english"],
                (true, false, false, false),
            ))
            .unwrap();
        let feats = store.extract_clock(1, &ScoreWeights::default());
        let names: Vec<&str> = feats
            .slot(8, Facet::Genre)
            .iter()
            .map(|(t, _)| v.name(*t))
            .collect();
        assert_eq!(names, ["pop", "rock"]);
    }

    #[test]
    fn unknown_user_yields_empty_features() {
        let store = FeatureStore::new();
        assert!(store.extract_clock(99, &ScoreWeights::default()).is_empty());
    }

    #[test]
    fn snapshot_round_trip_empty() {
        let store = FeatureStore::new();
        let mut buf = Vec::new();
        store.snapshot(&mut buf).unwrap();
        let restored = FeatureStore::restore(&mut buf.as_slice()).unwrap();
        assert_eq!(restored.user_count(), 0);
        assert_eq!(restored.watermark(), None);
    }

    #[test]
    fn snapshot_round_trip_single_event() {
        let v = vocab();
        let mut store = FeatureStore::new();
        store
            .ingest(&event(
                &v,
                5,
                777,
                ["pop", "sorrow", "english"],
                (true, true, false, false),
            ))
            .unwrap();
        let mut buf = Vec::new();
        store.snapshot(&mut buf).unwrap();
        let restored = FeatureStore::restore(&mut buf.as_slice()).unwrap();
        assert_eq!(restored.watermark(), store.watermark());
        let w = ScoreWeights::default();
        assert_eq!(restored.extract_clock(5, &w), store.extract_clock(5, &w));
    }

    #[test]
    fn corrupt_snapshots_are_rejected() {
        let bad_magic = b"NOPE1xxxxxxx".to_vec();
        assert!(matches!(
            FeatureStore::restore(&mut bad_magic.as_slice()),
            Err(Error::CorruptSnapshot(_))
        ));

        let v = vocab();
        let mut store = FeatureStore::new();
        store
            .ingest(&event(
                &v,
                5,
                777,
                ["pop", "sorrow", "english"],
                (true, true, false, false),
            ))
            .unwrap();
        let mut buf = Vec::new();
        store.snapshot(&mut buf).unwrap();
        buf.truncate(buf.len() - 3);
        assert!(matches!(
            FeatureStore::restore(&mut buf.as_slice()),
            Err(Error::CorruptSnapshot(_))
        ));
    }
}
