//! End-to-end pipeline stages behind the CLI: generate, train, evaluate,
//! report, and the one-command four-strategy comparison.
//!
//! Fixed output layout under the experiment directory:
//!
//! ```text
//! out/
//!   events.log                  generated clickstream
//!   manifest                    seed + config hash + event count
//!   ckpt-<strategy>             model parameters + feature-store snapshot
//!   telemetry-<strategy>.csv    step, epoch_minutes, running_loss, strategy
//!   metrics.csv                 cell, strategy, n, auc
//!   probe.csv                   train_hour, eval_hour, auc, strategy
//!   hour_dist.csv               hour, tag, percent, facet
//!   compare.txt                 human-readable comparison table
//! ```

use std::fmt::Write as _;
use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::clock::TimeMode;
use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::eval::{
    self, compute_report, forgetting_probe, forgetting_spread, hour_distribution, MetricsReport,
};
use crate::feature_store::FeatureStore;
use crate::model::ScoringModel;
use crate::parallel;
use crate::sim::{evaluate_frozen, run_stream, Generator, StreamOutcome, TelemetryRow};
use crate::types::{
    read_event_log_path, write_event_log, Facet, InteractionEvent, UserTier, Vocabulary,
    HOURS_PER_DAY,
};

/// Format a float with six significant digits, plain notation where it fits.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        return "0.00000".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let exp = x.abs().log10().floor() as i32;
    if !(-4..6).contains(&exp) {
        format!("{x:.5e}")
    } else {
        let decimals = (5 - exp).max(0) as usize;
        format!("{x:.decimals$}")
    }
}

fn fmt_cell(x: Option<f64>) -> String {
    x.map(fmt_sig).unwrap_or_else(|| "NA".into())
}

pub fn events_path(out_dir: &Path) -> PathBuf {
    out_dir.join("events.log")
}

pub fn manifest_path(out_dir: &Path) -> PathBuf {
    out_dir.join("manifest")
}

pub fn checkpoint_path(out_dir: &Path, strategy: &str) -> PathBuf {
    out_dir.join(format!("ckpt-{strategy}"))
}

pub fn telemetry_path(out_dir: &Path, strategy: &str) -> PathBuf {
    out_dir.join(format!("telemetry-{strategy}.csv"))
}

#[derive(Debug, Clone)]
pub struct GenerateSummary {
    pub events_path: PathBuf,
    pub manifest_path: PathBuf,
    pub n_events: usize,
}

/// Generate the synthetic clickstream and write the event log plus manifest.
pub fn cmd_generate(cfg: &ExperimentConfig, out_dir: &Path) -> Result<GenerateSummary> {
    let (summary, _) = generate_events(cfg, out_dir)?;
    Ok(summary)
}

fn generate_events(
    cfg: &ExperimentConfig,
    out_dir: &Path,
) -> Result<(GenerateSummary, Vec<InteractionEvent>)> {
    fs::create_dir_all(out_dir)
        .map_err(|e| Error::Config(format!("cannot create {}: {e}", out_dir.display())))?;
    let vocab = cfg.vocabulary()?;
    let generator = Generator::new(&cfg.generator, &vocab, cfg.seed)?;
    let events = generator.generate();

    let log_path = events_path(out_dir);
    let mut w = BufWriter::new(fs::File::create(&log_path)?);
    write_event_log(&mut w, &events, &vocab)?;
    w.flush()?;

    let man_path = manifest_path(out_dir);
    let manifest = format!(
        "seed = {}\nconfig_sha256 = \"{}\"\nn_events = {}\nevents_file = \"events.log\"\n",
        cfg.seed,
        cfg.content_hash(),
        events.len()
    );
    fs::write(&man_path, manifest)?;

    Ok((
        GenerateSummary {
            events_path: log_path,
            manifest_path: man_path,
            n_events: events.len(),
        },
        events,
    ))
}

#[derive(Debug, Clone)]
pub struct TrainSummary {
    pub strategy: String,
    pub checkpoint_path: PathBuf,
    pub telemetry_path: PathBuf,
    pub steps: usize,
    pub last_train_hour: Option<usize>,
    pub final_running_loss: Option<f64>,
}

fn write_telemetry(path: &Path, rows: &[TelemetryRow], strategy: &str) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "step,epoch_minutes,running_loss,strategy")?;
    for row in rows {
        writeln!(
            w,
            "{},{},{},{strategy}",
            row.step,
            row.epoch_minutes,
            fmt_sig(row.running_loss)
        )?;
    }
    w.flush()?;
    Ok(())
}

fn write_checkpoint(path: &Path, model: &ScoringModel, store: &FeatureStore) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    model.save(&mut w)?;
    store.snapshot(&mut w)?;
    w.flush()?;
    Ok(())
}

fn read_checkpoint(path: &Path) -> Result<(ScoringModel, FeatureStore)> {
    let mut r =
        BufReader::new(fs::File::open(path).map_err(|e| {
            Error::Config(format!("cannot open checkpoint {}: {e}", path.display()))
        })?);
    let model = ScoringModel::load(&mut r)?;
    let store = FeatureStore::restore(&mut r)?;
    Ok((model, store))
}

/// Train one strategy over an event log (streaming, one pass) and persist the
/// checkpoint and telemetry.
pub fn cmd_train(
    cfg: &ExperimentConfig,
    log_path: &Path,
    strategy_name: &str,
    out_dir: &Path,
) -> Result<TrainSummary> {
    let vocab = cfg.vocabulary()?;
    let events = read_event_log_path(log_path, &vocab)?;
    verify_sorted(&events)?;
    let outcome = train_in_memory(cfg, &events, strategy_name)?;
    fs::create_dir_all(out_dir)
        .map_err(|e| Error::Config(format!("cannot create {}: {e}", out_dir.display())))?;
    let ckpt = checkpoint_path(out_dir, strategy_name);
    write_checkpoint(&ckpt, &outcome.model, &outcome.store)?;
    let telemetry = telemetry_path(out_dir, strategy_name);
    write_telemetry(&telemetry, &outcome.telemetry, strategy_name)?;
    Ok(TrainSummary {
        strategy: strategy_name.to_string(),
        checkpoint_path: ckpt,
        telemetry_path: telemetry,
        steps: outcome.steps,
        last_train_hour: outcome.last_train_hour,
        final_running_loss: outcome.telemetry.last().map(|r| r.running_loss),
    })
}

fn train_in_memory(
    cfg: &ExperimentConfig,
    events: &[InteractionEvent],
    strategy_name: &str,
) -> Result<StreamOutcome> {
    let strategy = cfg.strategy_by_name(strategy_name)?;
    run_stream(events, strategy, cfg)
}

/// Reject a log whose events are not in nondecreasing time order, naming the
/// first offending line. The streaming loop checks consumed events anyway;
/// this catches disorder past the point where training would stop reading.
fn verify_sorted(events: &[InteractionEvent]) -> Result<()> {
    for (i, pair) in events.windows(2).enumerate() {
        if pair[1].timestamp < pair[0].timestamp {
            return Err(Error::OutOfOrderEvent {
                line: Some(i + 2),
                event_minutes: pair[1].timestamp.epoch_minutes(),
                watermark_minutes: pair[0].timestamp.epoch_minutes(),
            });
        }
    }
    Ok(())
}

/// Held-out slice of a sorted log: everything at or after the first eval day.
fn eval_slice<'a>(
    cfg: &ExperimentConfig,
    events: &'a [InteractionEvent],
) -> &'a [InteractionEvent] {
    let eval_start = cfg.eval.warmup_days + cfg.eval.train_days;
    let split = events.partition_point(|e| e.timestamp.day_index() < eval_start);
    &events[split..]
}

/// Everything measured for one strategy.
#[derive(Debug, Clone)]
pub struct StrategyMetrics {
    pub strategy: String,
    pub report: MetricsReport,
    pub probe: [Option<f64>; HOURS_PER_DAY],
    pub spread: Option<f64>,
    pub train_hour: Option<usize>,
}

fn evaluate_in_memory(
    cfg: &ExperimentConfig,
    model: &ScoringModel,
    store: &FeatureStore,
    holdout: &[InteractionEvent],
    strategy_name: &str,
    train_hour: Option<usize>,
) -> Result<StrategyMetrics> {
    let weights = cfg.score_weights()?;
    // Headline metrics use the configured time mode; the forgetting probe
    // pins each slice's request time to its integer hour.
    let scored = evaluate_frozen(model, store, holdout, &weights, cfg.time_mode()?)?;
    let report = compute_report(&scored);
    let probe_scored = evaluate_frozen(model, store, holdout, &weights, TimeMode::Hourly)?;
    let probe = forgetting_probe(&probe_scored);
    Ok(StrategyMetrics {
        strategy: strategy_name.to_string(),
        report,
        probe,
        spread: forgetting_spread(&probe),
        train_hour,
    })
}

fn write_metrics_csv(path: &Path, all: &[StrategyMetrics]) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "cell,strategy,n,auc")?;
    for m in all {
        let r = &m.report;
        writeln!(w, "auc,{},{},{}", m.strategy, r.n, fmt_cell(r.auc))?;
        writeln!(
            w,
            "uauc,{},{},{}",
            m.strategy,
            r.uauc_users,
            fmt_cell(r.uauc)
        )?;
        for tier in UserTier::ALL {
            let t = &r.per_tier[tier.index()];
            writeln!(
                w,
                "auc_tier_{},{},{},{}",
                tier.name(),
                m.strategy,
                t.n,
                fmt_cell(t.auc)
            )?;
            writeln!(
                w,
                "uauc_tier_{},{},{},{}",
                tier.name(),
                m.strategy,
                t.uauc_users,
                fmt_cell(t.uauc)
            )?;
        }
        for hour in 0..HOURS_PER_DAY {
            writeln!(
                w,
                "auc_hour_{hour:02},{},{},{}",
                m.strategy,
                r.per_hour_n[hour],
                fmt_cell(r.per_hour[hour])
            )?;
        }
    }
    w.flush()?;
    Ok(())
}

fn write_probe_csv(path: &Path, all: &[StrategyMetrics]) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "train_hour,eval_hour,auc,strategy")?;
    for m in all {
        let train_hour = m
            .train_hour
            .map(|h| h.to_string())
            .unwrap_or_else(|| "NA".into());
        for (hour, cell) in m.probe.iter().enumerate() {
            writeln!(w, "{train_hour},{hour},{},{}", fmt_cell(*cell), m.strategy)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn write_hour_dist_csv(path: &Path, events: &[InteractionEvent], vocab: &Vocabulary) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "hour,tag,percent,facet")?;
    for facet in Facet::ALL {
        let report = hour_distribution(events, facet, vocab)?;
        for (hour, row) in report.rows.iter().enumerate() {
            let Some(row) = row else { continue };
            for (tag, percent) in row {
                writeln!(
                    w,
                    "{hour},{},{},{}",
                    vocab.name(*tag),
                    fmt_sig(*percent),
                    facet.name()
                )?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Evaluate a stored checkpoint on the held-out slice of an event log, and
/// write that strategy's metrics, probe and hour-distribution files.
pub fn cmd_evaluate(
    cfg: &ExperimentConfig,
    log_path: &Path,
    strategy_name: &str,
    out_dir: &Path,
) -> Result<StrategyMetrics> {
    cfg.strategy_by_name(strategy_name)?;
    let vocab = cfg.vocabulary()?;
    let events = read_event_log_path(log_path, &vocab)?;
    verify_sorted(&events)?;
    let (model, store) = read_checkpoint(&checkpoint_path(out_dir, strategy_name))?;
    for facet in Facet::ALL {
        let rows = model
            .tables()
            .table(crate::embedding::TableKey::Facet(facet))
            .rows();
        if rows != vocab.size(facet) {
            return Err(Error::Config(format!(
                "checkpoint {} vocabulary ({} rows) does not match config ({})",
                facet.name(),
                rows,
                vocab.size(facet)
            )));
        }
    }
    let holdout = eval_slice(cfg, &events);
    let train_hour = store.watermark().map(|w| w.hour_bucket());
    let metrics = evaluate_in_memory(cfg, &model, &store, holdout, strategy_name, train_hour)?;
    write_metrics_csv(&out_dir.join("metrics.csv"), std::slice::from_ref(&metrics))?;
    write_probe_csv(&out_dir.join("probe.csv"), std::slice::from_ref(&metrics))?;
    write_hour_dist_csv(&out_dir.join("hour_dist.csv"), &events, &vocab)?;
    Ok(metrics)
}

/// One row of the final comparison table.
#[derive(Debug, Clone)]
pub struct CompareRow {
    pub strategy: String,
    pub auc: Option<f64>,
    pub uauc: Option<f64>,
    pub spread: Option<f64>,
    pub n: usize,
}

#[derive(Debug, Clone)]
pub struct CompareTable {
    pub rows: Vec<CompareRow>,
}

impl CompareTable {
    pub fn row(&self, strategy: &str) -> Option<&CompareRow> {
        self.rows.iter().find(|r| r.strategy == strategy)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<16} {:>10} {:>10} {:>10} {:>8}",
            "strategy", "auc", "uauc", "spread", "n"
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:<16} {:>10} {:>10} {:>10} {:>8}",
                r.strategy,
                fmt_cell(r.auc),
                fmt_cell(r.uauc),
                fmt_cell(r.spread),
                r.n
            );
        }
        let _ = writeln!(out);
        let _ = writeln!(
            out,
            "auc: held-out AUC. uauc: unweighted mean of per-user AUC over users \
             with at least one positive and one negative."
        );
        let _ = writeln!(
            out,
            "spread: max - min per-hour AUC of the final checkpoint; larger means \
             the model over-fit the training wall-clock hour."
        );
        out
    }
}

/// Run every configured strategy on one generated stream and emit the full
/// comparison: per-strategy checkpoints and telemetry, combined metrics,
/// probe and hour-distribution CSVs, and the rendered table.
///
/// Strategies train in parallel; each training is internally sequential and
/// all file writes happen afterwards in configuration order, so outputs are a
/// pure function of (config, seed).
pub fn cmd_compare(cfg: &ExperimentConfig, out_dir: &Path) -> Result<CompareTable> {
    let (_, events) = generate_events(cfg, out_dir)?;
    let vocab = cfg.vocabulary()?;
    let holdout = eval_slice(cfg, &events);

    let results: Vec<Result<(StrategyMetrics, TrainSummary)>> =
        parallel::map(&cfg.strategies, |name| {
            let outcome = train_in_memory(cfg, &events, name)?;
            let ckpt = checkpoint_path(out_dir, name);
            write_checkpoint(&ckpt, &outcome.model, &outcome.store)?;
            let tele = telemetry_path(out_dir, name);
            write_telemetry(&tele, &outcome.telemetry, name)?;
            let metrics = evaluate_in_memory(
                cfg,
                &outcome.model,
                &outcome.store,
                holdout,
                name,
                outcome.last_train_hour,
            )?;
            let summary = TrainSummary {
                strategy: name.clone(),
                checkpoint_path: ckpt,
                telemetry_path: tele,
                steps: outcome.steps,
                last_train_hour: outcome.last_train_hour,
                final_running_loss: outcome.telemetry.last().map(|r| r.running_loss),
            };
            Ok((metrics, summary))
        });

    let mut all = Vec::with_capacity(results.len());
    for r in results {
        all.push(r?.0);
    }

    write_metrics_csv(&out_dir.join("metrics.csv"), &all)?;
    write_probe_csv(&out_dir.join("probe.csv"), &all)?;
    write_hour_dist_csv(&out_dir.join("hour_dist.csv"), &events, &vocab)?;

    let table = CompareTable {
        rows: all
            .iter()
            .map(|m| CompareRow {
                strategy: m.strategy.clone(),
                auc: m.report.auc,
                uauc: m.report.uauc,
                spread: m.spread,
                n: m.report.n,
            })
            .collect(),
    };
    fs::write(out_dir.join("compare.txt"), table.render())?;
    Ok(table)
}

/// Rebuild the comparison table from the CSVs in an output directory.
pub fn cmd_report(out_dir: &Path) -> Result<String> {
    let metrics = fs::read_to_string(out_dir.join("metrics.csv")).map_err(|e| {
        Error::Config(format!(
            "cannot read {}: {e}",
            out_dir.join("metrics.csv").display()
        ))
    })?;
    let probe = fs::read_to_string(out_dir.join("probe.csv")).map_err(|e| {
        Error::Config(format!(
            "cannot read {}: {e}",
            out_dir.join("probe.csv").display()
        ))
    })?;

    let parse_cell = |v: &str| -> Option<f64> { v.parse().ok() };
    let mut rows: Vec<CompareRow> = Vec::new();
    for line in metrics.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(Error::Parse {
                line: 0,
                msg: format!("metrics.csv row {line:?} does not have 4 fields"),
            });
        }
        let (cell, strategy, n, value) = (fields[0], fields[1], fields[2], fields[3]);
        if !rows.iter().any(|r| r.strategy == strategy) {
            rows.push(CompareRow {
                strategy: strategy.to_string(),
                auc: None,
                uauc: None,
                spread: None,
                n: 0,
            });
        }
        let row = rows.iter_mut().find(|r| r.strategy == strategy).unwrap();
        match cell {
            "auc" => {
                row.auc = parse_cell(value);
                row.n = n.parse().unwrap_or(0);
            }
            "uauc" => row.uauc = parse_cell(value),
            _ => {}
        }
    }
    // spreads from the probe file
    for row in &mut rows {
        let cells: Vec<f64> = probe
            .lines()
            .skip(1)
            .filter_map(|line| {
                let fields: Vec<&str> = line.split(',').collect();
                (fields.len() == 4 && fields[3] == row.strategy)
                    .then(|| fields[2].parse().ok())
                    .flatten()
            })
            .collect();
        if cells.len() >= 2 {
            let max = cells.iter().cloned().fold(f64::MIN, f64::max);
            let min = cells.iter().cloned().fold(f64::MAX, f64::min);
            row.spread = Some(max - min);
        }
    }

    let table = CompareTable { rows };
    let text = table.render();
    fs::write(out_dir.join("compare.txt"), &text)?;
    Ok(text)
}

/// Support for probing arbitrary scorers (e.g. the ground-truth oracle) with
/// the same per-hour machinery the real models go through.
pub fn probe_scored(
    scored: &[crate::sim::ScoredEvent],
) -> ([Option<f64>; HOURS_PER_DAY], Option<f64>) {
    let probe = forgetting_probe(scored);
    let spread = forgetting_spread(&probe);
    (probe, spread)
}

pub use eval::HourDistributionReport;
