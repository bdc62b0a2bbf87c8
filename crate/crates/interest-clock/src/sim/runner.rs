//! The streaming training loop: events are consumed strictly in time order,
//! each one scored and trained on with features extracted *before* it is
//! ingested into the feature store, so a sample can never see its own labels.

use crate::clock::{ClockStrategy, RequestTime, TimeMode};
use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::feature_store::{FeatureStore, ScoreWeights};
use crate::model::{EventInputs, ScoringModel};
use crate::parallel;
use crate::types::{InteractionEvent, SimTime, UserTier};

/// One telemetry row: mean loss over the trailing cadence window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TelemetryRow {
    pub step: usize,
    pub epoch_minutes: u64,
    pub running_loss: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub probability: f64,
    pub loss: f64,
}

/// Event-at-a-time driver. `run_stream` wraps it; tests drive it directly to
/// observe per-step behavior.
pub struct StreamTrainer {
    pub store: FeatureStore,
    pub model: ScoringModel,
    weights: ScoreWeights,
    time_mode: TimeMode,
    current_day: Option<u64>,
    steps: usize,
}

impl StreamTrainer {
    pub fn new(model: ScoringModel, weights: ScoreWeights, time_mode: TimeMode) -> StreamTrainer {
        StreamTrainer {
            store: FeatureStore::new(),
            model,
            weights,
            time_mode,
            current_day: None,
            steps: 0,
        }
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Process one event: expire old shards on day rollover, extract features
    /// from history only, optionally train, then ingest.
    pub fn process(
        &mut self,
        event: &InteractionEvent,
        train: bool,
    ) -> Result<Option<StepOutcome>> {
        let day = event.timestamp.day_index();
        if self.current_day.map_or(true, |d| day > d) {
            self.store.expire(
                SimTime::from_day_minute(day, 0).max(self.store.watermark().unwrap_or_default()),
            );
            self.current_day = Some(day);
        }

        let outcome = if train {
            let clock = self.store.extract_clock(event.user_id, &self.weights);
            let inputs = EventInputs {
                user_id: event.user_id,
                item_id: event.item_id,
                item_tags: event.tags,
                clock: &clock,
                req: RequestTime::from_sim(event.timestamp, self.time_mode),
            };
            let prediction = self.model.predict(&inputs)?;
            let loss = self
                .model
                .train_step(&inputs, event.labels.finish, self.steps)?;
            self.steps += 1;
            Some(StepOutcome {
                probability: prediction.probability,
                loss,
            })
        } else {
            None
        };

        self.store.ingest(event)?;
        Ok(outcome)
    }
}

/// Result of one streaming run: the trained model, the feature store frozen
/// at the end of training, telemetry, and the wall-hour of the last update.
#[derive(Debug)]
pub struct StreamOutcome {
    pub model: ScoringModel,
    pub store: FeatureStore,
    pub telemetry: Vec<TelemetryRow>,
    pub steps: usize,
    pub last_train_hour: Option<usize>,
}

/// One-pass streaming training over a sorted event log.
///
/// Days `[0, warmup_days)` only populate the feature store; days
/// `[warmup_days, warmup_days + train_days)` are trained on, in order; later
/// events are left untouched for evaluation.
pub fn run_stream(
    events: &[InteractionEvent],
    strategy: ClockStrategy,
    cfg: &ExperimentConfig,
) -> Result<StreamOutcome> {
    let vocab_sizes = cfg.generator.vocab_sizes();
    let model = ScoringModel::new(
        &cfg.model_config(),
        cfg.optim_config(),
        strategy,
        vocab_sizes,
        cfg.seed,
    );
    let mut trainer = StreamTrainer::new(model, cfg.score_weights()?, cfg.time_mode()?);

    let train_start = cfg.eval.warmup_days;
    let train_end = cfg.eval.warmup_days + cfg.eval.train_days;
    let mut telemetry = Vec::new();
    let mut window_loss = 0.0;
    let mut window_n = 0usize;
    let mut last_train_hour = None;

    for (i, event) in events.iter().enumerate() {
        let day = event.timestamp.day_index();
        if day >= train_end {
            break;
        }
        let train = day >= train_start;
        let outcome = trainer
            .process(event, train)
            .map_err(|e| e.with_line(i + 1))?;
        if let Some(step) = outcome {
            last_train_hour = Some(event.timestamp.hour_bucket());
            window_loss += step.loss;
            window_n += 1;
            if window_n == cfg.eval.telemetry_every {
                telemetry.push(TelemetryRow {
                    step: trainer.steps(),
                    epoch_minutes: event.timestamp.epoch_minutes(),
                    running_loss: window_loss / window_n as f64,
                });
                window_loss = 0.0;
                window_n = 0;
            }
        }
    }
    if window_n > 0 {
        telemetry.push(TelemetryRow {
            step: trainer.steps(),
            epoch_minutes: trainer.store.watermark().map_or(0, |w| w.epoch_minutes()),
            running_loss: window_loss / window_n as f64,
        });
    }

    let steps = trainer.steps();
    Ok(StreamOutcome {
        model: trainer.model,
        store: trainer.store,
        telemetry,
        steps,
        last_train_hour,
    })
}

/// One frozen-model prediction on one held-out event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredEvent {
    pub user_id: u64,
    pub tier: UserTier,
    pub hour: usize,
    pub score: f64,
    pub label: bool,
}

/// Score held-out events with a frozen model and frozen feature store:
/// no parameter updates, no ingestion, so evaluation order cannot matter.
pub fn evaluate_frozen(
    model: &ScoringModel,
    store: &FeatureStore,
    events: &[InteractionEvent],
    weights: &ScoreWeights,
    time_mode: TimeMode,
) -> Result<Vec<ScoredEvent>> {
    let scored = parallel::map(events, |event| -> Result<ScoredEvent> {
        let clock = store.extract_clock(event.user_id, weights);
        let inputs = EventInputs {
            user_id: event.user_id,
            item_id: event.item_id,
            item_tags: event.tags,
            clock: &clock,
            req: RequestTime::from_sim(event.timestamp, time_mode),
        };
        let prediction = model.predict(&inputs)?;
        Ok(ScoredEvent {
            user_id: event.user_id,
            tier: event.user_tier,
            hour: event.timestamp.hour_bucket(),
            score: prediction.probability,
            label: event.labels.finish,
        })
    });
    scored.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ModelConfig, OptimConfig};
    use crate::sim::{Generator, GeneratorConfig};
    use crate::types::Vocabulary;

    fn test_cfg() -> ExperimentConfig {
        ExperimentConfig::from_toml(
            "
            [generator]
            n_users = 30
            n_items = 60
            days = 8
            events_per_user_day = [2, 3, 4]

            [model]
            embedding_dim = 4
            hidden = [8]
            user_hash_bits = 6
            item_hash_bits = 6

            [eval]
            warmup_days = 3
            train_days = 3
            ",
            &[],
        )
        .unwrap()
    }

    fn events(cfg: &ExperimentConfig) -> Vec<InteractionEvent> {
        let vocab = cfg.vocabulary().unwrap();
        Generator::new(&cfg.generator, &vocab, cfg.seed)
            .unwrap()
            .generate()
    }

    #[test]
    fn empty_stream_returns_untrained_model() {
        let cfg = test_cfg();
        let out = run_stream(&[], ClockStrategy::Naive, &cfg).unwrap();
        assert_eq!(out.steps, 0);
        assert!(out.telemetry.is_empty());
        assert_eq!(out.last_train_hour, None);
        assert_eq!(out.store.user_count(), 0);
        // identical to a freshly built model
        let fresh = ScoringModel::new(
            &cfg.model_config(),
            cfg.optim_config(),
            ClockStrategy::Naive,
            cfg.generator.vocab_sizes(),
            cfg.seed,
        );
        for i in 0..fresh.param_count() {
            assert_eq!(out.model.param(i), fresh.param(i));
        }
    }

    #[test]
    fn single_event_extracts_before_ingest() {
        // The first processed event must be scored against an empty store
        // even when its own labels are loud (sentinel: every label set).
        let cfg = test_cfg();
        let stream = events(&cfg);
        let sentinel = {
            let mut e = stream[0];
            e.labels = crate::types::BehaviorLabels::new(true, true, false, true).unwrap();
            e
        };
        let model = ScoringModel::new(
            &cfg.model_config(),
            cfg.optim_config(),
            ClockStrategy::Naive,
            cfg.generator.vocab_sizes(),
            cfg.seed,
        );
        let expected = {
            let empty = crate::feature_store::InterestClockFeatures::new();
            model
                .predict(&EventInputs {
                    user_id: sentinel.user_id,
                    item_id: sentinel.item_id,
                    item_tags: sentinel.tags,
                    clock: &empty,
                    req: RequestTime::from_sim(sentinel.timestamp, TimeMode::Continuous),
                })
                .unwrap()
        };
        let mut trainer = StreamTrainer::new(model, ScoreWeights::default(), TimeMode::Continuous);
        let outcome = trainer.process(&sentinel, true).unwrap().unwrap();
        assert_eq!(outcome.probability, expected.probability);
        assert_eq!(trainer.steps(), 1);
        assert_eq!(trainer.store.user_count(), 1);
    }

    #[test]
    fn replay_is_deterministic() {
        let cfg = test_cfg();
        let stream = events(&cfg);
        let a = run_stream(&stream, ClockStrategy::gaussian(1.0, 0.0).unwrap(), &cfg).unwrap();
        let b = run_stream(&stream, ClockStrategy::gaussian(1.0, 0.0).unwrap(), &cfg).unwrap();
        assert_eq!(a.steps, b.steps);
        assert_eq!(a.telemetry, b.telemetry);
        let mut buf_a = Vec::new();
        let mut buf_b = Vec::new();
        a.model.save(&mut buf_a).unwrap();
        b.model.save(&mut buf_b).unwrap();
        assert_eq!(buf_a, buf_b);
    }

    #[test]
    fn out_of_order_events_are_rejected_with_line() {
        let cfg = test_cfg();
        let mut stream = events(&cfg);
        // swap the first strictly increasing pair so order actually breaks
        let i = (0..stream.len() - 1)
            .find(|&i| stream[i].timestamp < stream[i + 1].timestamp)
            .expect("stream has increasing timestamps");
        stream.swap(i, i + 1);
        let err = run_stream(&stream, ClockStrategy::Naive, &cfg).unwrap_err();
        match err {
            crate::error::Error::OutOfOrderEvent { line, .. } => assert_eq!(line, Some(i + 2)),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn warmup_events_do_not_train() {
        let cfg = test_cfg();
        let stream = events(&cfg);
        let out = run_stream(&stream, ClockStrategy::Naive, &cfg).unwrap();
        let train_start = cfg.eval.warmup_days;
        let train_end = train_start + cfg.eval.train_days;
        let expected: usize = stream
            .iter()
            .filter(|e| {
                let d = e.timestamp.day_index();
                d >= train_start && d < train_end
            })
            .count();
        assert_eq!(out.steps, expected);
        assert!(out.steps > 0);
        // store holds warmup + training days only
        let wm = out.store.watermark().unwrap();
        assert!(wm.day_index() < train_end);
    }

    #[test]
    fn frozen_evaluation_is_order_invariant() {
        let cfg = test_cfg();
        let stream = events(&cfg);
        let out = run_stream(&stream, ClockStrategy::gaussian(1.0, 0.0).unwrap(), &cfg).unwrap();
        let eval_start = (cfg.eval.warmup_days + cfg.eval.train_days) * 1440;
        let holdout: Vec<InteractionEvent> = stream
            .iter()
            .copied()
            .filter(|e| e.timestamp.epoch_minutes() >= eval_start)
            .collect();
        assert!(!holdout.is_empty());
        let weights = ScoreWeights::default();
        let forward = evaluate_frozen(
            &out.model,
            &out.store,
            &holdout,
            &weights,
            TimeMode::Continuous,
        )
        .unwrap();
        let mut shuffled = holdout.clone();
        shuffled.reverse();
        let backward = evaluate_frozen(
            &out.model,
            &out.store,
            &shuffled,
            &weights,
            TimeMode::Continuous,
        )
        .unwrap();
        let mut backward = backward;
        backward.reverse();
        assert_eq!(forward, backward);
        // scoring twice changes nothing
        let again = evaluate_frozen(
            &out.model,
            &out.store,
            &holdout,
            &weights,
            TimeMode::Continuous,
        )
        .unwrap();
        assert_eq!(forward, again);
    }

    #[test]
    fn evaluate_frozen_empty_input() {
        let cfg = test_cfg();
        let model = ScoringModel::new(
            &ModelConfig::default(),
            OptimConfig::default(),
            ClockStrategy::Naive,
            cfg.generator.vocab_sizes(),
            1,
        );
        let store = FeatureStore::new();
        let scored = evaluate_frozen(
            &model,
            &store,
            &[],
            &ScoreWeights::default(),
            TimeMode::Continuous,
        )
        .unwrap();
        assert!(scored.is_empty());
        let _ = Vocabulary::synthetic(GeneratorConfig::default().vocab_sizes()).unwrap();
    }
}
