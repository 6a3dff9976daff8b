mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use sa_core::cli::{EXIT_CONFIG, EXIT_MISSING_INPUT, EXIT_OK, EXIT_SCHEMA, EXIT_USAGE};

fn sa(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sa")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn small_config(dir: &Path) -> String {
    let path = dir.join("small.toml");
    fs::write(&path, common::SMALL_CONFIG).unwrap();
    path.to_str().unwrap().to_string()
}

fn run_ok(args: &[&str]) {
    let o = sa(args);
    assert_eq!(code(&o), EXIT_OK, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn synth_with_same_seed_writes_identical_trees() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let (a, b, c) = (dir.path().join("a"), dir.path().join("b"), dir.path().join("c"));
    for (out, seed) in [(&a, "7"), (&b, "7"), (&c, "8")] {
        run_ok(&[
            "synth",
            "--config",
            &cfg,
            "--seed",
            seed,
            "--out",
            out.to_str().unwrap(),
        ]);
    }
    assert!(common::tree_diff(&a, &b).is_empty());
    assert!(!common::tree_diff(&a, &c).is_empty());
}

#[test]
fn extract_writes_feature_columns_and_label() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = dir.path().join("run");
    let out = out.to_str().unwrap();
    run_ok(&["synth", "--config", &cfg, "--out", out]);
    run_ok(&["extract", "--config", &cfg, "--out", out]);
    let text = fs::read_to_string(Path::new(out).join("dataset.csv")).unwrap();
    let header: Vec<&str> = text.lines().next().unwrap().split(',').collect();
    let features: Vec<&str> = header.iter().copied().take_while(|h| *h != "sa_label").collect();
    assert_eq!(features, sa_core::featureset::FEATURE_NAMES);
    assert!(header.contains(&"sa_label"));
    assert_eq!(text.lines().count(), 121);
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let (one, three) = (dir.path().join("t1"), dir.path().join("t3"));
    run_ok(&[
        "all",
        "--config",
        &cfg,
        "--threads",
        "1",
        "--out",
        one.to_str().unwrap(),
    ]);
    run_ok(&[
        "all",
        "--config",
        &cfg,
        "--threads",
        "3",
        "--out",
        three.to_str().unwrap(),
    ]);
    assert_eq!(common::tree_diff(&one, &three), Vec::<std::path::PathBuf>::new());
    let report = fs::read_to_string(one.join("report.md")).unwrap();
    assert!(report.contains("All features") && report.contains("Selected features"));
}

#[test]
fn failures_map_to_distinct_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("empty");
    let out = out.to_str().unwrap();

    let o = sa(&["train", "--out", out]);
    assert_eq!(code(&o), EXIT_MISSING_INPUT);
    let err = String::from_utf8_lossy(&o.stderr);
    assert_eq!(err.lines().count(), 1, "{err}");
    assert!(err.starts_with("sa: error:"));

    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "[train]\nlearning_rate = 7.0\n").unwrap();
    assert_eq!(
        code(&sa(&["synth", "--config", bad.to_str().unwrap(), "--out", out])),
        EXIT_CONFIG
    );
    fs::write(&bad, "colour = 1\n").unwrap();
    assert_eq!(
        code(&sa(&["synth", "--config", bad.to_str().unwrap(), "--out", out])),
        EXIT_CONFIG
    );

    assert_eq!(code(&sa(&["frobnicate"])), EXIT_USAGE);
    assert_eq!(code(&sa(&["train", "--threads", "0"])), EXIT_USAGE);

    // a dataset with a feature column missing
    fs::create_dir_all(out).unwrap();
    let header: Vec<&str> = sa_core::featureset::FEATURE_NAMES[1..].to_vec();
    let csv = format!("{},sa_label,participant_id,drive_id,window_index\n", header.join(","));
    fs::write(Path::new(out).join("dataset.csv"), csv).unwrap();
    assert_eq!(code(&sa(&["train", "--out", out])), EXIT_SCHEMA);
}

#[test]
fn show_config_round_trips() {
    let o = sa(&["show-config", "--seed", "11"]);
    assert_eq!(code(&o), EXIT_OK);
    let cfg = sa_core::config::PipelineConfig::from_toml(&String::from_utf8(o.stdout).unwrap()).unwrap();
    assert_eq!(cfg.seed, Some(11));
    assert_eq!(cfg.train.seed, 11);
}
