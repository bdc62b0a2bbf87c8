//! Synthetic clickstream generator with ground-truth time-of-day-varying user
//! preferences.
//!
//! Each user carries a static base affinity per tag plus circular Gaussian
//! bumps on the 24-hour circle: some population-wide (e.g. a night-peaked
//! sorrow mood), some private with random peaks. Impressions are drawn by
//! sampling candidate items and choosing softmax-proportionally to the user's
//! current affinity, so the per-hour tag mix shifts with the clock the way a
//! ranking system's exposure would. Labels are Bernoulli draws whose success
//! probabilities are the logistic of the time-modulated affinity: finish and
//! like aligned with it, skip and dislike against it.

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::embedding::mix_seed;
use crate::error::{Error, Result};
use crate::model::sigmoid;
use crate::parallel;
use crate::types::{
    BehaviorLabels, Facet, InteractionEvent, SimTime, Tag, UserTier, Vocabulary, HOURS_PER_DAY,
};

/// A circular Gaussian bump shared by the whole population, declared in the
/// config by tag name.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct BumpSpec {
    pub facet: String,
    pub tag: String,
    pub peak_hour: f64,
    pub amplitude: f64,
    pub width: f64,
}

fn default_population_bumps() -> Vec<BumpSpec> {
    vec![
        BumpSpec {
            facet: "mood".into(),
            tag: "sorrow".into(),
            peak_hour: 2.0,
            amplitude: 2.2,
            width: 3.0,
        },
        BumpSpec {
            facet: "mood".into(),
            tag: "energetic".into(),
            peak_hour: 9.0,
            amplitude: 1.8,
            width: 2.5,
        },
        BumpSpec {
            facet: "genre".into(),
            tag: "dance".into(),
            peak_hour: 21.0,
            amplitude: 1.8,
            width: 2.5,
        },
        BumpSpec {
            facet: "genre".into(),
            tag: "classical".into(),
            peak_hour: 14.0,
            amplitude: 1.4,
            width: 3.0,
        },
    ]
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct GeneratorConfig {
    pub n_users: u64,
    pub n_items: u64,
    pub genre_vocab: usize,
    pub mood_vocab: usize,
    pub language_vocab: usize,
    pub days: u64,
    /// Events per user per day for the low/middle/high tiers.
    pub events_per_user_day: [u32; 3],
    /// Probability that a sampled finish label is replaced by a fair coin.
    pub label_noise: f64,
    /// Logistic scale applied to the mean tag affinity.
    pub affinity_scale: f64,
    /// Std-dev of the static per-(user, tag) base affinity.
    pub base_affinity_std: f64,
    /// Private time bumps per facet per user.
    pub user_bumps_per_facet: usize,
    /// |amplitude| range of private bumps; the sign is a coin flip.
    pub user_bump_amplitude: [f64; 2],
    pub user_bump_width: [f64; 2],
    /// Population bump amplitudes are jittered per user by this factor range.
    pub population_amp_jitter: [f64; 2],
    pub population_bumps: Vec<BumpSpec>,
    /// Uniformly sampled candidate items per impression.
    pub candidates_per_event: usize,
    /// Strength of the evening peak in event times (0 = uniform over the day).
    pub diurnal_amplitude: f64,
    pub finish_bias: f64,
    pub like_bias: f64,
    pub skip_bias: f64,
    pub dislike_bias: f64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            n_users: 2000,
            n_items: 5000,
            genre_vocab: 10,
            mood_vocab: 8,
            language_vocab: 6,
            days: 44,
            events_per_user_day: [6, 12, 24],
            label_noise: 0.05,
            affinity_scale: 2.0,
            base_affinity_std: 0.8,
            user_bumps_per_facet: 3,
            user_bump_amplitude: [2.0, 3.5],
            user_bump_width: [1.5, 3.0],
            population_amp_jitter: [0.6, 1.4],
            population_bumps: default_population_bumps(),
            candidates_per_event: 8,
            diurnal_amplitude: 0.4,
            finish_bias: -0.2,
            like_bias: -2.2,
            skip_bias: 0.3,
            dislike_bias: -3.0,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_users == 0 || self.n_items == 0 || self.days == 0 {
            return Err(Error::Config(
                "generator.n_users, n_items and days must be >= 1".into(),
            ));
        }
        if self.genre_vocab == 0 || self.mood_vocab == 0 || self.language_vocab == 0 {
            return Err(Error::Config(
                "generator vocabulary sizes must be >= 1".into(),
            ));
        }
        if self.events_per_user_day.iter().any(|&e| e == 0) {
            return Err(Error::Config(
                "generator.events_per_user_day must be >= 1".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.label_noise) {
            return Err(Error::Config(
                "generator.label_noise must lie in [0, 1)".into(),
            ));
        }
        if self.candidates_per_event == 0 {
            return Err(Error::Config(
                "generator.candidates_per_event must be >= 1".into(),
            ));
        }
        for range in [
            self.user_bump_amplitude,
            self.user_bump_width,
            self.population_amp_jitter,
        ] {
            if !(range[0] <= range[1]) || range[0] < 0.0 {
                return Err(Error::Config(format!(
                    "generator range [{}, {}] must be ordered and non-negative",
                    range[0], range[1]
                )));
            }
        }
        if self.user_bump_width[0] <= 0.0 && self.user_bumps_per_facet > 0 {
            return Err(Error::Config(
                "generator.user_bump_width must be > 0".into(),
            ));
        }
        for b in &self.population_bumps {
            if Facet::from_name(&b.facet).is_none() {
                return Err(Error::Config(format!("unknown bump facet {:?}", b.facet)));
            }
            if !(0.0..24.0).contains(&b.peak_hour) || b.width <= 0.0 || !b.amplitude.is_finite() {
                return Err(Error::Config(format!(
                    "bump on {}/{} needs peak in [0,24), width > 0, finite amplitude",
                    b.facet, b.tag
                )));
            }
        }
        Ok(())
    }

    pub fn vocab_sizes(&self) -> [usize; 3] {
        [self.genre_vocab, self.mood_vocab, self.language_vocab]
    }
}

/// One resolved time bump on a specific tag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeBump {
    pub tag: u16,
    pub peak_hour: f64,
    pub amplitude: f64,
    pub width: f64,
}

impl TimeBump {
    /// Bump value at the given hour: amplitude at the peak, decaying with
    /// circular distance on the 24h circle.
    fn value(&self, hour: f64) -> f64 {
        let diff = (hour - self.peak_hour).rem_euclid(24.0);
        let delta = diff.min(24.0 - diff);
        self.amplitude * (-0.5 * (delta / self.width).powi(2)).exp()
    }
}

/// Ground-truth preferences of one synthetic user.
#[derive(Debug, Clone)]
pub struct UserProfile {
    pub user_id: u64,
    pub tier: UserTier,
    base: [Vec<f64>; 3],
    bumps: [Vec<TimeBump>; 3],
}

impl UserProfile {
    /// Time-modulated affinity to one tag at a (fractional) hour of day.
    pub fn affinity(&self, facet: Facet, tag: u16, hour: f64) -> f64 {
        let f = facet.index();
        let mut a = self.base[f][tag as usize];
        for bump in &self.bumps[f] {
            if bump.tag == tag {
                a += bump.value(hour);
            }
        }
        a
    }

    /// Mean affinity over an item's three tags.
    pub fn item_affinity(&self, tags: &[Tag; 3], hour: f64) -> f64 {
        let sum: f64 = tags
            .iter()
            .map(|t| self.affinity(t.facet, t.id, hour))
            .sum();
        sum / 3.0
    }

    pub fn bumps(&self, facet: Facet) -> &[TimeBump] {
        &self.bumps[facet.index()]
    }
}

/// Deterministic event-stream generator. All randomness derives from the
/// seed; per-user streams are independent, so generation parallelizes without
/// changing the output.
pub struct Generator {
    cfg: GeneratorConfig,
    seed: u64,
    profiles: Vec<UserProfile>,
    item_tags: Vec<[Tag; 3]>,
    hour_weights: [f64; HOURS_PER_DAY],
}

impl Generator {
    pub fn new(cfg: &GeneratorConfig, vocab: &Vocabulary, seed: u64) -> Result<Generator> {
        cfg.validate()?;
        // Resolve population bumps against the vocabulary once.
        let mut population: [Vec<TimeBump>; 3] = Default::default();
        for spec in &cfg.population_bumps {
            let facet = Facet::from_name(&spec.facet)
                .ok_or_else(|| Error::Config(format!("unknown bump facet {:?}", spec.facet)))?;
            let tag = vocab.resolve(facet, &spec.tag).ok_or_else(|| {
                Error::Config(format!(
                    "bump tag {:?} is not in the {} vocabulary",
                    spec.tag, spec.facet
                ))
            })?;
            population[facet.index()].push(TimeBump {
                tag: tag.id,
                peak_hour: spec.peak_hour,
                amplitude: spec.amplitude,
                width: spec.width,
            });
        }

        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 0x5052_4f46));
        let sizes = cfg.vocab_sizes();
        let profiles = (0..cfg.n_users)
            .map(|user_id| {
                let tier = match rng.gen_range(0u8..3) {
                    0 => UserTier::Low,
                    1 => UserTier::Middle,
                    _ => UserTier::High,
                };
                let mut base: [Vec<f64>; 3] = Default::default();
                let mut bumps: [Vec<TimeBump>; 3] = Default::default();
                for f in 0..3 {
                    base[f] = (0..sizes[f])
                        .map(|_| gaussian(&mut rng) * cfg.base_affinity_std)
                        .collect();
                    for b in &population[f] {
                        let jitter = rng
                            .gen_range(cfg.population_amp_jitter[0]..=cfg.population_amp_jitter[1]);
                        bumps[f].push(TimeBump {
                            amplitude: b.amplitude * jitter,
                            ..*b
                        });
                    }
                    for _ in 0..cfg.user_bumps_per_facet {
                        let magnitude =
                            rng.gen_range(cfg.user_bump_amplitude[0]..=cfg.user_bump_amplitude[1]);
                        let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                        bumps[f].push(TimeBump {
                            tag: rng.gen_range(0..sizes[f]) as u16,
                            peak_hour: rng.gen_range(0.0..24.0),
                            amplitude: sign * magnitude,
                            width: rng.gen_range(cfg.user_bump_width[0]..=cfg.user_bump_width[1]),
                        });
                    }
                }
                UserProfile {
                    user_id,
                    tier,
                    base,
                    bumps,
                }
            })
            .collect();

        let mut item_rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 0x4954_454d));
        let item_tags = (0..cfg.n_items)
            .map(|_| {
                [
                    Tag {
                        facet: Facet::Genre,
                        id: item_rng.gen_range(0..sizes[0]) as u16,
                    },
                    Tag {
                        facet: Facet::Mood,
                        id: item_rng.gen_range(0..sizes[1]) as u16,
                    },
                    Tag {
                        facet: Facet::Language,
                        id: item_rng.gen_range(0..sizes[2]) as u16,
                    },
                ]
            })
            .collect();

        let mut hour_weights = [0.0; HOURS_PER_DAY];
        for (h, w) in hour_weights.iter_mut().enumerate() {
            let phase = 2.0 * std::f64::consts::PI * (h as f64 + 0.5 - 21.0) / 24.0;
            *w = 1.0 + cfg.diurnal_amplitude * phase.cos();
        }

        Ok(Generator {
            cfg: cfg.clone(),
            seed,
            profiles,
            item_tags,
            hour_weights,
        })
    }

    pub fn profiles(&self) -> &[UserProfile] {
        &self.profiles
    }

    pub fn item_tags(&self, item_id: u64) -> &[Tag; 3] {
        &self.item_tags[item_id as usize]
    }

    /// Ground-truth finish probability, before label noise.
    pub fn finish_probability(&self, user_id: u64, item_id: u64, ts: SimTime) -> f64 {
        let profile = &self.profiles[user_id as usize];
        let affinity =
            profile.item_affinity(&self.item_tags[item_id as usize], ts.fractional_hour());
        sigmoid(self.cfg.affinity_scale * affinity + self.cfg.finish_bias)
    }

    /// All events, globally sorted by timestamp. Deterministic for a given
    /// seed: ties are ordered by (user, per-user sequence).
    pub fn generate(&self) -> Vec<InteractionEvent> {
        let users: Vec<u64> = (0..self.cfg.n_users).collect();
        let per_user = parallel::map(&users, |user_id| self.events_for_user(*user_id));
        let mut events: Vec<(u64, u32, InteractionEvent)> = Vec::new();
        for (user_id, stream) in users.iter().zip(per_user) {
            events.extend(
                stream
                    .into_iter()
                    .enumerate()
                    .map(|(seq, e)| (*user_id, seq as u32, e)),
            );
        }
        events.sort_unstable_by_key(|(user, seq, e)| (e.timestamp, *user, *seq));
        events.into_iter().map(|(_, _, e)| e).collect()
    }

    fn events_for_user(&self, user_id: u64) -> Vec<InteractionEvent> {
        let cfg = &self.cfg;
        let profile = &self.profiles[user_id as usize];
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(self.seed, 0xE000_0000 | user_id));
        let per_day = cfg.events_per_user_day[profile.tier.index()];
        let hour_dist = WeightedIndex::new(self.hour_weights).expect("positive hour weights");

        let mut events = Vec::with_capacity((cfg.days * per_day as u64) as usize);
        for day in 0..cfg.days {
            let mut minutes: Vec<u64> = (0..per_day)
                .map(|_| hour_dist.sample(&mut rng) as u64 * 60 + rng.gen_range(0..60))
                .collect();
            minutes.sort_unstable();
            for minute in minutes {
                let ts = SimTime::from_day_minute(day, minute);
                events.push(self.one_event(profile, ts, &mut rng));
            }
        }
        events
    }

    fn one_event(
        &self,
        profile: &UserProfile,
        ts: SimTime,
        rng: &mut ChaCha8Rng,
    ) -> InteractionEvent {
        let cfg = &self.cfg;
        let hour = ts.fractional_hour();

        // Exposure: sample candidates uniformly, keep one softmax-weighted by
        // current affinity.
        let candidates: Vec<u64> = (0..cfg.candidates_per_event)
            .map(|_| rng.gen_range(0..cfg.n_items))
            .collect();
        let affinities: Vec<f64> = candidates
            .iter()
            .map(|item| profile.item_affinity(&self.item_tags[*item as usize], hour))
            .collect();
        let max = affinities.iter().cloned().fold(f64::MIN, f64::max);
        let weights: Vec<f64> = affinities.iter().map(|a| (a - max).exp()).collect();
        let pick = WeightedIndex::new(&weights)
            .expect("softmax weights are positive")
            .sample(rng);
        let item_id = candidates[pick];
        let affinity = affinities[pick];

        let s = cfg.affinity_scale * affinity;
        let mut finish = rng.gen_bool(sigmoid(s + cfg.finish_bias));
        if cfg.label_noise > 0.0 && rng.gen_bool(cfg.label_noise) {
            finish = rng.gen_bool(0.5);
        }
        let skip = !finish && rng.gen_bool(sigmoid(-s + cfg.skip_bias));
        let like = rng.gen_bool(sigmoid(s + cfg.like_bias));
        let dislike = !like && rng.gen_bool(sigmoid(-s + cfg.dislike_bias));

        InteractionEvent::new(
            profile.user_id,
            item_id,
            ts,
            self.item_tags[item_id as usize],
            BehaviorLabels::new(like, finish, skip, dislike).expect("finish excludes skip"),
            profile.tier,
        )
        .expect("generator builds valid events")
    }
}

/// Standard normal via Box-Muller.
fn gaussian<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}
