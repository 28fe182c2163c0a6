//! End-to-end exercises of the command-line binary.

use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_firecast"))
}

fn fresh_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("firecast-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str]) -> std::process::Output {
    bin().args(args).output().expect("binary runs")
}

fn assert_success(out: &std::process::Output, what: &str) {
    assert!(
        out.status.success(),
        "{what} failed (status {:?}):\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn help_exits_zero() {
    let out = run(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    for sub in ["mesh", "simulate", "fit", "predict", "score", "benchmark"] {
        assert!(text.contains(sub), "usage should mention `{sub}`");
    }
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    let out = run(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_files_exit_one_with_the_path() {
    let out = run(&["fit", "--config", "/no/such/config.conf"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("/no/such/config.conf"), "{err}");

    // a config that points at a missing data file
    let dir = fresh_dir("missing");
    let conf = dir.join("run.conf");
    std::fs::write(&conf, "data = /no/such/data.csv\n").unwrap();
    let out = run(&["fit", "--config", conf.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("/no/such/data.csv"), "{err}");
}

fn exists(dir: &Path, name: &str) -> bool {
    let path = dir.join(name);
    path.exists() && std::fs::metadata(&path).map(|m| m.len() > 0).unwrap_or(false)
}

#[test]
fn pipeline_end_to_end() {
    let dir = fresh_dir("e2e");
    let out_dir = dir.to_str().unwrap();
    let conf = dir.join("run.conf");
    std::fs::write(
        &conf,
        format!(
            "data = {out_dir}/train.csv\n\
             truth = {out_dir}/simulated.csv\n\
             sim_nx = 5\n\
             sim_ny = 4\n\
             sim_years = 2\n\
             max_evals = 80\n\
             n_samples = 30\n\
             thresholds_cnt = 0, 1, 2, 3, 5, 10\n\
             thresholds_ba = 0, 5, 20, 100, 1000\n\
             seed = 4242\n"
        ),
    )
    .unwrap();
    let conf = conf.to_str().unwrap();

    let sim = run(&["simulate", "--config", conf, "--out", out_dir]);
    assert_success(&sim, "simulate");
    assert!(exists(&dir, "simulated.csv"));
    assert!(exists(&dir, "train.csv"));
    let train = std::fs::read_to_string(dir.join("train.csv")).unwrap();
    assert!(train.contains(",NA,NA"), "training copy has masked rows");

    let mesh = run(&["mesh", "--config", conf, "--out", out_dir]);
    assert_success(&mesh, "mesh");
    assert!(exists(&dir, "mesh_fine.txt"));
    assert!(exists(&dir, "mesh_coarse.txt"));

    let fit = run(&["fit", "--config", conf, "--out", out_dir]);
    assert_success(&fit, "fit");
    assert!(exists(&dir, "fit.json"));
    assert!(exists(&dir, "fit_occurrence.txt"));
    assert!(exists(&dir, "fit_joint.txt"));
    let state = std::fs::read_to_string(dir.join("fit.json")).unwrap();
    assert!(state.contains("theta_joint"), "{state}");

    let predict = run(&["predict", "--config", conf, "--out", out_dir]);
    assert_success(&predict, "predict");
    assert!(exists(&dir, "predictions.csv"));

    let bench = run(&["benchmark", "--config", conf, "--out", out_dir]);
    assert_success(&bench, "benchmark");
    assert!(exists(&dir, "benchmark_predictions.csv"));

    let score = run(&["score", "--config", conf, "--out", out_dir]);
    assert_success(&score, "score");
    assert!(exists(&dir, "scores.csv"));
    assert!(exists(&dir, "benchmark_scores.csv"));
    assert!(exists(&dir, "comparison.txt"));
    let scores = std::fs::read_to_string(dir.join("scores.csv")).unwrap();
    assert!(scores.starts_with("target_id,variable,score\n"), "{scores}");
    assert!(scores.contains("total,ALL"), "{scores}");
    let comparison = std::fs::read_to_string(dir.join("comparison.txt")).unwrap();
    assert!(comparison.contains("two_part"), "{comparison}");
    assert!(comparison.contains("benchmark"), "{comparison}");

    // the prediction step is deterministic: rerunning reproduces the file
    let first = std::fs::read_to_string(dir.join("predictions.csv")).unwrap();
    let again = run(&["predict", "--config", conf, "--out", out_dir]);
    assert_success(&again, "second predict");
    let second = std::fs::read_to_string(dir.join("predictions.csv")).unwrap();
    assert_eq!(first, second, "prediction output must be reproducible");
}
