//! Binary-level checks: exit codes, determinism of file outputs, and the
//! documented interfaces of each subcommand.

use std::path::Path;
use std::process::{Command, Output};

fn hqtlp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hqtlp"))
        .args(args)
        .env_remove("HQTLP_SEED")
        .env_remove("HQTLP_OUT")
        .output()
        .expect("binary runs")
}

fn tmp(dir: &tempfile::TempDir, name: &str) -> String {
    dir.path().join(name).to_str().unwrap().to_string()
}

#[test]
fn generate_is_deterministic_and_reports_shape() {
    let dir = tempfile::tempdir().unwrap();
    let a = tmp(&dir, "a.tsv");
    let b = tmp(&dir, "b.tsv");
    let out =
        hqtlp(&["generate", "--preset", "mesh-like", "--seed", "7", "--out", &a]);
    assert!(out.status.success());
    let msg = String::from_utf8(out.stdout).unwrap();
    assert!(msg.contains("n=38"), "summary line: {msg}");
    assert!(msg.contains("T=1000"));

    let out = hqtlp(&["generate", "--preset", "mesh-like", "--seed", "7", "--out", &b]);
    assert!(out.status.success());
    assert_eq!(
        std::fs::read(&a).unwrap(),
        std::fs::read(&b).unwrap(),
        "same seed must produce identical files"
    );
}

#[test]
fn generate_dcn_preset_header() {
    let dir = tempfile::tempdir().unwrap();
    let path = tmp(&dir, "dcn.tsv");
    let out = hqtlp(&["generate", "--preset", "dcn-like", "--out", &path]);
    assert!(out.status.success());
    let body = std::fs::read_to_string(&path).unwrap();
    assert_eq!(body.lines().next().unwrap(), "128 350");
}

#[test]
fn invalid_preset_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = hqtlp(&["generate", "--preset", "nope", "--out", &tmp(&dir, "x.tsv")]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().contains("unknown preset"));
}

#[test]
fn missing_dataset_is_runtime_error() {
    let out = hqtlp(&["bench", "--data", "/nonexistent/net.tsv", "--out", "/tmp/never"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn unknown_flag_is_usage_error() {
    let out = hqtlp(&["generate", "--bogus-flag"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn env_variable_supplies_seed() {
    let dir = tempfile::tempdir().unwrap();
    let a = tmp(&dir, "env.tsv");
    let b = tmp(&dir, "flag.tsv");
    let out = Command::new(env!("CARGO_BIN_EXE_hqtlp"))
        .args(["generate", "--preset", "mesh-like", "--out", &a])
        .env("HQTLP_SEED", "123")
        .output()
        .unwrap();
    assert!(out.status.success());
    let out = hqtlp(&["generate", "--preset", "mesh-like", "--seed", "123", "--out", &b]);
    assert!(out.status.success());
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

fn write_small_dataset(dir: &tempfile::TempDir) -> String {
    let path = tmp(dir, "small.tsv");
    let cfg = tmp(dir, "synth.toml");
    std::fs::write(
        &cfg,
        "[synth]\nn = 10\nt_steps = 24\nw_hi = 500.0\nsparsity = 0.3\nseed = 5\n",
    )
    .unwrap();
    let out = hqtlp(&["generate", "--config", &cfg, "--out", &path]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    path
}

fn quick_train_cfg(dir: &tempfile::TempDir) -> String {
    let cfg = tmp(dir, "train.toml");
    std::fs::write(
        &cfg,
        "[train]\nwindow = 5\nepochs_pretrain = 1\nepochs_online = 1\n\
         [model]\nd_z = 2\nd_1 = 3\nd_2 = 2\nd_h = 4\nh_1 = 6\nh_2 = 3\n",
    )
    .unwrap();
    cfg
}

#[test]
fn train_predict_pipeline_produces_expected_files() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_small_dataset(&dir);
    let cfg = quick_train_cfg(&dir);
    let train_out = tmp(&dir, "train-out");

    let out = hqtlp(&[
        "train", "--data", &data, "--config", &cfg, "--test-steps", "4", "--seed", "3",
        "--out", &train_out,
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let ckpt = Path::new(&train_out).join("checkpoint.bin");
    assert!(ckpt.exists());
    let log = std::fs::read_to_string(Path::new(&train_out).join("train_log.csv")).unwrap();
    assert!(log.starts_with("epoch,window,loss_g,loss_d\n"));
    assert!(log.lines().count() > 1);

    let predict_out = tmp(&dir, "predict-out");
    let out = hqtlp(&[
        "predict", "--data", &data, "--checkpoint", ckpt.to_str().unwrap(), "--config", &cfg,
        "--test-steps", "4", "--seed", "3", "--out", &predict_out,
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let records =
        std::fs::read_to_string(Path::new(&predict_out).join("records.csv")).unwrap();
    assert!(records.starts_with("t,rmse,ew_kl,mr\n"));
    assert_eq!(records.lines().count(), 1 + 4);

    // The predictions dump is a loadable edge list usable by `heatmap`.
    let preds = Path::new(&predict_out).join("predictions.tsv");
    assert!(preds.exists());
    let img = tmp(&dir, "pred.ppm");
    let out = hqtlp(&["heatmap", "--data", preds.to_str().unwrap(), "-t", "22", "--out", &img]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let bytes = std::fs::read(&img).unwrap();
    assert!(bytes.starts_with(b"P6\n10 10\n255\n"));
}

#[test]
fn bench_writes_csvs_for_each_method() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_small_dataset(&dir);
    let cfg = quick_train_cfg(&dir);
    let bench_out = tmp(&dir, "bench-out");
    let out = hqtlp(&[
        "bench", "--data", &data, "--config", &cfg, "--methods", "gru,cn-svd",
        "--test-steps", "4", "--seed", "1", "--out", &bench_out,
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for name in ["gru.csv", "cn-svd.csv", "summary.csv"] {
        assert!(Path::new(&bench_out).join(name).exists(), "missing {name}");
    }
    let summary = std::fs::read_to_string(Path::new(&bench_out).join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 3);

    let out = hqtlp(&[
        "bench", "--data", &data, "--config", &cfg, "--methods", "svd",
        "--test-steps", "4", "--out", &tmp(&dir, "never"),
    ]);
    assert_eq!(out.status.code(), Some(2), "unknown method is a usage error");
}

#[test]
fn heatmap_rejects_out_of_range_step() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_small_dataset(&dir);
    let out = hqtlp(&["heatmap", "--data", &data, "-t", "99", "--out", &tmp(&dir, "x.ppm")]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bench_rejects_short_dataset_with_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_small_dataset(&dir); // T = 24
    let out = hqtlp(&["bench", "--data", &data, "--out", &tmp(&dir, "never")]);
    // Default window 10 + test 50 needs T > 60.
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("too short"));
}

#[test]
fn malformed_dataset_reports_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let path = tmp(&dir, "bad.tsv");
    std::fs::write(&path, "4 2\n0 0 1 5.0\n0 1 1 3.0\n").unwrap();
    let out = hqtlp(&["heatmap", "--data", &path, "-t", "0", "--out", &tmp(&dir, "x.ppm")]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 3"), "stderr: {err}");
}
