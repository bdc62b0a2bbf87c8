//! Shared domain vocabulary: simulation time, tag facets, behavior labels,
//! interaction events, and the line-delimited event-log format.

use std::fmt;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

pub const MINUTES_PER_DAY: u64 = 1440;
pub const HOURS_PER_DAY: usize = 24;

/// Simulation-relative time in integer minutes. No calendars, no time zones:
/// the only derived quantities that matter are day index and hour of day.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct SimTime(u64);

impl SimTime {
    pub fn from_minutes(epoch_minutes: u64) -> Self {
        SimTime(epoch_minutes)
    }

    pub fn from_day_minute(day: u64, minute_of_day: u64) -> Self {
        debug_assert!(minute_of_day < MINUTES_PER_DAY);
        SimTime(day * MINUTES_PER_DAY + minute_of_day)
    }

    pub fn epoch_minutes(self) -> u64 {
        self.0
    }

    pub fn day_index(self) -> u64 {
        self.0 / MINUTES_PER_DAY
    }

    /// Hour bucket in [0, 24): floor of the fractional hour of day.
    pub fn hour_bucket(self) -> usize {
        ((self.0 % MINUTES_PER_DAY) / 60) as usize
    }

    /// Hour of day as a real in [0, 24).
    pub fn fractional_hour(self) -> f64 {
        (self.0 % MINUTES_PER_DAY) as f64 / 60.0
    }

    /// Day-of-week index in [0, 7). Only the time-encoding baseline uses this.
    pub fn day_of_week(self) -> usize {
        (self.day_index() % 7) as usize
    }
}

/// One of the three tag families carried by every item.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Facet {
    Genre,
    Mood,
    Language,
}

impl Facet {
    pub const ALL: [Facet; 3] = [Facet::Genre, Facet::Mood, Facet::Language];

    pub fn index(self) -> usize {
        match self {
            Facet::Genre => 0,
            Facet::Mood => 1,
            Facet::Language => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Facet::Genre => "genre",
            Facet::Mood => "mood",
            Facet::Language => "language",
        }
    }

    pub fn from_name(name: &str) -> Option<Facet> {
        match name {
            "genre" => Some(Facet::Genre),
            "mood" => Some(Facet::Mood),
            "language" => Some(Facet::Language),
            _ => None,
        }
    }
}

impl fmt::Display for Facet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A tag value within one facet's vocabulary. Ids are assigned in
/// lexicographic name order, so ordering by id equals ordering by value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Tag {
    pub facet: Facet,
    pub id: u16,
}

/// Fixed tag vocabulary, one name list per facet.
///
/// Names are sorted before id assignment so that the deterministic tie-break
/// "tag value ascending" coincides with ascending tag id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    names: [Vec<String>; 3],
}

// Curated base names; important tags first so they survive truncation at
// small vocabulary sizes.
const GENRES: [&str; 10] = [
    "pop",
    "dance",
    "rock",
    "jazz",
    "classical",
    "electronic",
    "hiphop",
    "folk",
    "country",
    "ambient",
];
const MOODS: [&str; 8] = [
    "sorrow",
    "happy",
    "energetic",
    "calm",
    "melancholy",
    "upbeat",
    "romantic",
    "relaxed",
];
const LANGUAGES: [&str; 6] = [
    "english", "mandarin", "spanish", "japanese", "korean", "french",
];

impl Vocabulary {
    /// Build the synthetic vocabulary for the given per-facet sizes
    /// (genre, mood, language). Sizes beyond the curated lists get generated
    /// names like `mood10`.
    pub fn synthetic(sizes: [usize; 3]) -> Result<Vocabulary> {
        let base: [&[&str]; 3] = [&GENRES, &MOODS, &LANGUAGES];
        let mut names: [Vec<String>; 3] = Default::default();
        for (f, facet) in Facet::ALL.iter().enumerate() {
            let size = sizes[f];
            if size == 0 {
                return Err(Error::Config(format!(
                    "vocabulary size for {facet} must be >= 1"
                )));
            }
            if size > u16::MAX as usize {
                return Err(Error::Config(format!(
                    "vocabulary size for {facet} exceeds {}",
                    u16::MAX
                )));
            }
            let mut list: Vec<String> = base[f].iter().take(size).map(|s| s.to_string()).collect();
            for i in list.len()..size {
                list.push(format!("{}{}", facet.name(), i));
            }
            list.sort();
            names[f] = list;
        }
        Ok(Vocabulary { names })
    }

    pub fn size(&self, facet: Facet) -> usize {
        self.names[facet.index()].len()
    }

    pub fn sizes(&self) -> [usize; 3] {
        [
            self.size(Facet::Genre),
            self.size(Facet::Mood),
            self.size(Facet::Language),
        ]
    }

    pub fn name(&self, tag: Tag) -> &str {
        &self.names[tag.facet.index()][tag.id as usize]
    }

    pub fn resolve(&self, facet: Facet, name: &str) -> Option<Tag> {
        self.names[facet.index()]
            .binary_search_by(|n| n.as_str().cmp(name))
            .ok()
            .map(|id| Tag {
                facet,
                id: id as u16,
            })
    }

    pub fn tags(&self, facet: Facet) -> impl Iterator<Item = Tag> + '_ {
        (0..self.size(facet)).map(move |id| Tag {
            facet,
            id: id as u16,
        })
    }
}

/// Per-event behavior labels. A play cannot be both finished and skipped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct BehaviorLabels {
    pub like: bool,
    pub finish: bool,
    pub skip: bool,
    pub dislike: bool,
}

impl BehaviorLabels {
    pub fn new(like: bool, finish: bool, skip: bool, dislike: bool) -> Result<BehaviorLabels> {
        if finish && skip {
            return Err(Error::InvalidEvent(
                "labels finish and skip are mutually exclusive".into(),
            ));
        }
        Ok(BehaviorLabels {
            like,
            finish,
            skip,
            dislike,
        })
    }
}

/// User activity tier; fixed per user across all events.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum UserTier {
    Low,
    Middle,
    High,
}

impl UserTier {
    pub const ALL: [UserTier; 3] = [UserTier::Low, UserTier::Middle, UserTier::High];

    pub fn index(self) -> usize {
        match self {
            UserTier::Low => 0,
            UserTier::Middle => 1,
            UserTier::High => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            UserTier::Low => "low",
            UserTier::Middle => "middle",
            UserTier::High => "high",
        }
    }

    pub fn from_name(name: &str) -> Option<UserTier> {
        match name {
            "low" => Some(UserTier::Low),
            "middle" => Some(UserTier::Middle),
            "high" => Some(UserTier::High),
            _ => None,
        }
    }
}

/// One user-item impression: the unit of both feature aggregation and
/// training. Carries exactly one tag per facet.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InteractionEvent {
    pub user_id: u64,
    pub item_id: u64,
    pub timestamp: SimTime,
    /// One tag per facet, indexed by `Facet::index()`.
    pub tags: [Tag; 3],
    pub labels: BehaviorLabels,
    pub user_tier: UserTier,
}

impl InteractionEvent {
    pub fn new(
        user_id: u64,
        item_id: u64,
        timestamp: SimTime,
        tags: [Tag; 3],
        labels: BehaviorLabels,
        user_tier: UserTier,
    ) -> Result<InteractionEvent> {
        for (i, tag) in tags.iter().enumerate() {
            if tag.facet != Facet::ALL[i] {
                return Err(Error::InvalidEvent(format!(
                    "tag slot {i} carries facet {} instead of {}",
                    tag.facet,
                    Facet::ALL[i]
                )));
            }
        }
        Ok(InteractionEvent {
            user_id,
            item_id,
            timestamp,
            tags,
            labels,
            user_tier,
        })
    }

    pub fn tag(&self, facet: Facet) -> Tag {
        self.tags[facet.index()]
    }
}

// ---------------------------------------------------------------------------
// Event log format
//
// One event per line, comma-separated, fixed field order:
//   user_id,item_id,epoch_minutes,genre,mood,language,like,finish,skip,dislike,tier
// This file is the interchange between the `generate` and `train` stages.
// ---------------------------------------------------------------------------

pub fn format_event_line(event: &InteractionEvent, vocab: &Vocabulary) -> String {
    let l = &event.labels;
    format!(
        "{},{},{},{},{},{},{},{},{},{},{}",
        event.user_id,
        event.item_id,
        event.timestamp.epoch_minutes(),
        vocab.name(event.tag(Facet::Genre)),
        vocab.name(event.tag(Facet::Mood)),
        vocab.name(event.tag(Facet::Language)),
        l.like as u8,
        l.finish as u8,
        l.skip as u8,
        l.dislike as u8,
        event.user_tier.name()
    )
}

pub fn parse_event_line(
    line: &str,
    line_no: usize,
    vocab: &Vocabulary,
) -> Result<InteractionEvent> {
    let err = |msg: String| Error::Parse { line: line_no, msg };
    let fields: Vec<&str> = line.split(',').collect();
    if fields.len() != 11 {
        return Err(err(format!("expected 11 fields, found {}", fields.len())));
    }
    let user_id: u64 = fields[0]
        .parse()
        .map_err(|_| err(format!("bad user_id {:?}", fields[0])))?;
    let item_id: u64 = fields[1]
        .parse()
        .map_err(|_| err(format!("bad item_id {:?}", fields[1])))?;
    let minutes: u64 = fields[2]
        .parse()
        .map_err(|_| err(format!("bad epoch_minutes {:?}", fields[2])))?;
    let mut tags = [Tag {
        facet: Facet::Genre,
        id: 0,
    }; 3];
    for (i, facet) in Facet::ALL.iter().enumerate() {
        tags[i] = vocab
            .resolve(*facet, fields[3 + i])
            .ok_or_else(|| err(format!("unknown {facet} tag {:?}", fields[3 + i])))?;
    }
    let mut flags = [false; 4];
    for (i, flag) in flags.iter_mut().enumerate() {
        *flag = match fields[6 + i] {
            "0" => false,
            "1" => true,
            other => return Err(err(format!("bad label flag {other:?}"))),
        };
    }
    let labels = BehaviorLabels::new(flags[0], flags[1], flags[2], flags[3])
        .map_err(|e| err(e.to_string()))?;
    let tier = UserTier::from_name(fields[10])
        .ok_or_else(|| err(format!("unknown tier {:?}", fields[10])))?;
    InteractionEvent::new(
        user_id,
        item_id,
        SimTime::from_minutes(minutes),
        tags,
        labels,
        tier,
    )
    .map_err(|e| err(e.to_string()))
}

pub fn write_event_log<W: Write>(
    mut w: W,
    events: &[InteractionEvent],
    vocab: &Vocabulary,
) -> Result<()> {
    for event in events {
        writeln!(w, "{}", format_event_line(event, vocab))?;
    }
    Ok(())
}

pub fn read_event_log<R: Read>(r: R, vocab: &Vocabulary) -> Result<Vec<InteractionEvent>> {
    let reader = BufReader::new(r);
    let mut events = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        events.push(parse_event_line(&line, i + 1, vocab)?);
    }
    Ok(events)
}

pub fn read_event_log_path(path: &Path, vocab: &Vocabulary) -> Result<Vec<InteractionEvent>> {
    let file = std::fs::File::open(path)
        .map_err(|e| Error::Config(format!("cannot open event log {}: {e}", path.display())))?;
    read_event_log(file, vocab)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vocab() -> Vocabulary {
        Vocabulary::synthetic([10, 8, 6]).unwrap()
    }

    #[test]
    fn hour_bucket_examples() {
        assert_eq!(SimTime::from_minutes(0).hour_bucket(), 0);
        // 07:59
        assert_eq!(SimTime::from_minutes(479).hour_bucket(), 7);
        // day 1, 08:01
        assert_eq!(SimTime::from_minutes(1440 + 481).hour_bucket(), 8);
    }

    #[test]
    fn fractional_hour_matches_bucket() {
        for m in [0u64, 59, 60, 719, 1439, 1440, 99_999] {
            let ts = SimTime::from_minutes(m);
            assert_eq!(ts.hour_bucket(), ts.fractional_hour().floor() as usize);
            assert!((0.0..24.0).contains(&ts.fractional_hour()));
        }
    }

    #[test]
    fn hour_bucket_daily_periodicity() {
        for m in (0..MINUTES_PER_DAY).step_by(7) {
            let a = SimTime::from_minutes(m).hour_bucket();
            let b = SimTime::from_minutes(m + MINUTES_PER_DAY).hour_bucket();
            assert_eq!(a, b);
            assert!(a < 24);
        }
    }

    #[test]
    fn vocabulary_ids_follow_name_order() {
        let v = vocab();
        for facet in Facet::ALL {
            let names: Vec<&str> = v.tags(facet).map(|t| v.name(t)).collect();
            let mut sorted = names.clone();
            sorted.sort();
            assert_eq!(names, sorted);
        }
        // Curated moods survive at default sizes.
        assert!(v.resolve(Facet::Mood, "sorrow").is_some());
        assert!(v.resolve(Facet::Genre, "dance").is_some());
        assert!(v.resolve(Facet::Mood, "no-such-mood").is_none());
    }

    #[test]
    fn vocabulary_truncation_keeps_curated_tags() {
        let v = Vocabulary::synthetic([3, 2, 1]).unwrap();
        assert!(v.resolve(Facet::Mood, "sorrow").is_some());
        assert!(v.resolve(Facet::Genre, "dance").is_some());
        assert_eq!(v.size(Facet::Language), 1);
    }

    #[test]
    fn finish_and_skip_are_exclusive() {
        assert!(BehaviorLabels::new(false, true, true, false).is_err());
        assert!(BehaviorLabels::new(true, true, false, true).is_ok());
    }

    #[test]
    fn event_requires_one_tag_per_facet() {
        let v = vocab();
        let g = v.resolve(Facet::Genre, "pop").unwrap();
        let bad = [g, g, g];
        assert!(InteractionEvent::new(
            1,
            2,
            SimTime::from_minutes(0),
            bad,
            BehaviorLabels::default(),
            UserTier::Low
        )
        .is_err());
    }

    #[test]
    fn event_line_round_trip() {
        let v = vocab();
        let event = InteractionEvent::new(
            42,
            1234,
            SimTime::from_minutes(63_360),
            [
                v.resolve(Facet::Genre, "pop").unwrap(),
                v.resolve(Facet::Mood, "sorrow").unwrap(),
                v.resolve(Facet::Language, "english").unwrap(),
            ],
            BehaviorLabels::new(false, true, false, false).unwrap(),
            UserTier::High,
        )
        .unwrap();
        let line = format_event_line(&event, &v);
        assert_eq!(line, "42,1234,63360,pop,sorrow,english,0,1,0,0,high");
        let parsed = parse_event_line(&line, 1, &v).unwrap();
        assert_eq!(parsed, event);
    }

    #[test]
    fn parse_reports_line_numbers() {
        let v = vocab();
        let log = "1,1,0,pop,sorrow,english,0,0,0,0,low\n1,1,10,pop,wat,english,0,0,0,0,low\n";
        let err = read_event_log(log.as_bytes(), &v).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error {other:?}"),
        }
    }
}
