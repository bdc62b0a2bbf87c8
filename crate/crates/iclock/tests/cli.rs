//! End-to-end CLI tests over a miniature experiment: exit codes, file
//! outputs, manifest stability, and checkpoint divergence across strategies.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn iclock(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_iclock"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

const SMALL_CONFIG: &str = "
seed = 7

[generator]
n_users = 30
n_items = 60
days = 7
events_per_user_day = [2, 4, 6]

[model]
embedding_dim = 4
hidden = [8]
user_hash_bits = 6
item_hash_bits = 6

[eval]
warmup_days = 3
train_days = 3
telemetry_every = 50
";

fn write_config(dir: &Path) -> String {
    let path = dir.join("experiment.toml");
    fs::write(&path, SMALL_CONFIG).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn missing_config_exits_2_and_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let out = iclock(&["generate", "-c", "no-such-config.toml"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("no-such-config.toml"), "stderr: {stderr}");
}

#[test]
fn invalid_override_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let out = iclock(
        &[
            "generate",
            "-c",
            &cfg,
            "--set",
            "clock.strategy=wat",
            "-o",
            "out",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn generate_writes_log_and_stable_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let out = iclock(&["generate", "-c", &cfg, "-o", "out_a"], dir.path());
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let out2 = iclock(&["generate", "-c", &cfg, "-o", "out_b"], dir.path());
    assert_eq!(out2.status.code(), Some(0));

    let log_a = fs::read(dir.path().join("out_a/events.log")).unwrap();
    let log_b = fs::read(dir.path().join("out_b/events.log")).unwrap();
    assert!(!log_a.is_empty());
    assert_eq!(log_a, log_b);
    let man_a = fs::read_to_string(dir.path().join("out_a/manifest")).unwrap();
    let man_b = fs::read_to_string(dir.path().join("out_b/manifest")).unwrap();
    assert_eq!(man_a, man_b);
    assert!(man_a.contains("config_sha256"));

    // a changed seed changes the manifest hash line
    let out3 = iclock(
        &["generate", "-c", &cfg, "--set", "seed=8", "-o", "out_c"],
        dir.path(),
    );
    assert_eq!(out3.status.code(), Some(0));
    let man_c = fs::read_to_string(dir.path().join("out_c/manifest")).unwrap();
    assert_ne!(man_a, man_c);
}

#[test]
fn train_then_evaluate_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    assert_eq!(
        iclock(&["generate", "-c", &cfg, "-o", "out"], dir.path())
            .status
            .code(),
        Some(0)
    );
    let train = iclock(
        &["train", "-c", &cfg, "-s", "gaussian", "-o", "out"],
        dir.path(),
    );
    assert_eq!(
        train.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&train.stderr)
    );
    assert!(dir.path().join("out/ckpt-gaussian").exists());
    assert!(dir.path().join("out/telemetry-gaussian.csv").exists());
    let telemetry = fs::read_to_string(dir.path().join("out/telemetry-gaussian.csv")).unwrap();
    assert!(telemetry.starts_with("step,epoch_minutes,running_loss,strategy"));

    let eval = iclock(
        &["evaluate", "-c", &cfg, "-s", "gaussian", "-o", "out"],
        dir.path(),
    );
    assert_eq!(
        eval.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&eval.stderr)
    );
    let metrics = fs::read_to_string(dir.path().join("out/metrics.csv")).unwrap();
    assert!(metrics.starts_with("cell,strategy,n,auc"));
    assert!(metrics.contains("auc,gaussian"));
}

#[test]
fn different_strategies_produce_different_checkpoints() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    assert_eq!(
        iclock(&["generate", "-c", &cfg, "-o", "out"], dir.path())
            .status
            .code(),
        Some(0)
    );
    for strategy in ["naive", "gaussian"] {
        let out = iclock(
            &["train", "-c", &cfg, "-s", strategy, "-o", "out"],
            dir.path(),
        );
        assert_eq!(out.status.code(), Some(0));
    }
    let naive = fs::read(dir.path().join("out/ckpt-naive")).unwrap();
    let gaussian = fs::read(dir.path().join("out/ckpt-gaussian")).unwrap();
    assert_ne!(naive, gaussian);

    // retraining the same strategy is idempotent
    assert_eq!(
        iclock(
            &["train", "-c", &cfg, "-s", "naive", "-o", "out"],
            dir.path()
        )
        .status
        .code(),
        Some(0)
    );
    assert_eq!(fs::read(dir.path().join("out/ckpt-naive")).unwrap(), naive);
}

#[test]
fn unsorted_log_exits_3_naming_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    assert_eq!(
        iclock(&["generate", "-c", &cfg, "-o", "out"], dir.path())
            .status
            .code(),
        Some(0)
    );
    let log_path = dir.path().join("out/events.log");
    let text = fs::read_to_string(&log_path).unwrap();
    let mut lines: Vec<&str> = text.lines().collect();
    // move the last (latest) event to the front to break ordering at line 2
    let last = lines.pop().unwrap();
    lines.insert(0, last);
    fs::write(&log_path, lines.join("\n") + "\n").unwrap();

    let out = iclock(
        &["train", "-c", &cfg, "-s", "naive", "-o", "out"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("line 2"), "stderr: {stderr}");
}

#[test]
fn compare_and_report_emit_four_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let out = iclock(&["compare", "-c", &cfg, "-o", "out"], dir.path());
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    for name in ["time_encoding", "naive", "adaptive", "gaussian"] {
        assert!(stdout.contains(name), "stdout: {stdout}");
    }
    for file in ["metrics.csv", "probe.csv", "hour_dist.csv", "compare.txt"] {
        assert!(dir.path().join("out").join(file).exists(), "missing {file}");
    }
    let report = iclock(&["report", "-o", "out"], dir.path());
    assert_eq!(report.status.code(), Some(0));
    let report_out = String::from_utf8_lossy(&report.stdout);
    assert!(report_out.contains("gaussian"));
}
