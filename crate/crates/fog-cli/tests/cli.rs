//! End-to-end tests of the `fog` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn fog(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fog"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("spawning fog")
}

fn assert_success(out: &Output) {
    assert!(
        out.status.success(),
        "exit {:?}\nstdout: {}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

const RUN_CONFIG: &str = r#"{
  "id": "freq_trunk",
  "data": {
    "kind": "synthetic",
    "synth": { "n_patients": 5, "duration_s": 30.0, "episodes_per_patient": 2, "episode_duration_s": 6.0 }
  },
  "features": { "kind": "group", "group": "frequency", "sensors": "trunk" },
  "hyper": { "seq_len": 2, "batch_size": 32, "hidden1": 6, "hidden2": 3, "epochs": 4, "learning_rate": 0.01 },
  "split": {
    "mode": "subject_independent",
    "train_patients": ["S01", "S02", "S03"],
    "test_patients": ["S04", "S05"]
  },
  "seed": 11
}"#;

#[test]
fn help_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = fog(&["--help"], dir.path());
    assert_success(&out);
    for sub in ["synth", "featurize", "run"] {
        let out = fog(&[sub, "--help"], dir.path());
        assert_success(&out);
    }
}

#[test]
fn synth_writes_expected_line_count_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "synth", "--duration", "60", "--freeze", "25:10", "--seed", "7", "-o", "p.txt",
    ];
    assert_success(&fog(&args, dir.path()));
    let text = fs::read_to_string(dir.path().join("p.txt")).unwrap();
    assert_eq!(text.lines().count(), 3840);
    // every line is 11 integer fields
    for line in text.lines().take(5) {
        assert_eq!(line.split_whitespace().count(), 11);
    }

    let first = text;
    assert_success(&fog(
        &["synth", "--duration", "60", "--freeze", "25:10", "--seed", "7", "-o", "q.txt"],
        dir.path(),
    ));
    let second = fs::read_to_string(dir.path().join("q.txt")).unwrap();
    assert_eq!(first, second);
}

#[test]
fn synth_zero_duration_fails() {
    let dir = tempfile::tempdir().unwrap();
    let out = fog(&["synth", "--duration", "0", "--seed", "1", "-o", "p.txt"], dir.path());
    assert!(!out.status.success());
    assert!(!dir.path().join("p.txt").exists());
}

#[test]
fn synth_bad_episode_syntax_fails() {
    let dir = tempfile::tempdir().unwrap();
    let out = fog(
        &["synth", "--duration", "10", "--freeze", "25-10", "--seed", "1", "-o", "p.txt"],
        dir.path(),
    );
    assert!(!out.status.success());
}

#[test]
fn featurize_column_counts() {
    let dir = tempfile::tempdir().unwrap();
    assert_success(&fog(
        &["synth", "--duration", "30", "--freeze", "10:5", "--seed", "3", "-o", "rec.txt"],
        dir.path(),
    ));

    assert_success(&fog(
        &["featurize", "-i", "rec.txt", "--group", "frequency", "--sensors", "all", "-o", "freq.csv"],
        dir.path(),
    ));
    let csv = fs::read_to_string(dir.path().join("freq.csv")).unwrap();
    let header: Vec<&str> = csv.lines().next().unwrap().split(',').collect();
    assert_eq!(header.len(), 62); // 61 features + label
    assert_eq!(header.last(), Some(&"label"));

    assert_success(&fog(
        &["featurize", "-i", "rec.txt", "--group", "statistical", "--sensors", "trunk", "-o", "stat.csv"],
        dir.path(),
    ));
    let csv = fs::read_to_string(dir.path().join("stat.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap().split(',').count(), 29); // 28 + label
}

#[test]
fn featurize_missing_input_leaves_no_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = fog(
        &["featurize", "-i", "absent.txt", "-o", "out.csv"],
        dir.path(),
    );
    assert!(!out.status.success());
    assert!(!dir.path().join("out.csv").exists());
}

#[test]
fn run_writes_report_roc_and_checkpoint_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("cfg.json"), RUN_CONFIG).unwrap();

    assert_success(&fog(
        &["run", "--config", "cfg.json", "--out", "runs_a"],
        dir.path(),
    ));
    let report_path = dir.path().join("runs_a/freq_trunk_subject_independent.json");
    let report_a = fs::read_to_string(&report_path).unwrap();
    let parsed: serde_json::Value = serde_json::from_str(&report_a).unwrap();
    assert_eq!(parsed["experiment"], "freq_trunk");
    assert!(parsed["auc"].as_f64().unwrap() > 0.5);
    assert!(dir
        .path()
        .join("runs_a/freq_trunk_subject_independent_roc.csv")
        .exists());
    let checkpoint = dir.path().join("runs_a/freq_trunk_subject_independent_model.json");
    let checkpoint_json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(checkpoint).unwrap()).unwrap();
    assert_eq!(checkpoint_json["format"], "fog-lstm-v1");

    // rerun into a second directory: byte-identical report
    assert_success(&fog(
        &["run", "--config", "cfg.json", "--out", "runs_b"],
        dir.path(),
    ));
    let report_b = fs::read_to_string(
        dir.path().join("runs_b/freq_trunk_subject_independent.json"),
    )
    .unwrap();
    assert_eq!(report_a, report_b);
}

#[test]
fn run_rejects_unknown_feature_group_before_compute() {
    let dir = tempfile::tempdir().unwrap();
    let bad = RUN_CONFIG.replace("\"frequency\"", "\"wavelets\"");
    fs::write(dir.path().join("bad.json"), bad).unwrap();
    let out = fog(
        &["run", "--config", "bad.json", "--out", "runs"],
        dir.path(),
    );
    assert!(!out.status.success());
    assert!(!dir.path().join("runs").exists());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("bad.json"), "stderr: {stderr}");
}

#[test]
fn grid_summary_has_thirteen_rows_per_mode() {
    let dir = tempfile::tempdir().unwrap();
    // dependent mode needs each patient to hold both classes; the defaults
    // in RUN_CONFIG give every patient two freeze episodes.
    fs::write(dir.path().join("cfg.json"), RUN_CONFIG).unwrap();
    assert_success(&fog(
        &[
            "run", "--config", "cfg.json", "--grid", "--mode", "both", "--out", "grid",
            "--jobs", "4",
        ],
        dir.path(),
    ));
    let summary = fs::read_to_string(dir.path().join("grid/summary.csv")).unwrap();
    let lines: Vec<&str> = summary.lines().collect();
    assert_eq!(lines[0], "experiment,mode,auc,sensitivity,specificity");
    let independent = lines.iter().filter(|l| l.contains(",subject_independent,")).count();
    let dependent = lines.iter().filter(|l| l.contains(",subject_dependent,")).count();
    assert_eq!(independent, 13);
    assert_eq!(dependent, 13);
    // 26 reports on disk
    let reports = fs::read_dir(dir.path().join("grid"))
        .unwrap()
        .filter(|e| {
            let name = e.as_ref().unwrap().file_name();
            let name = name.to_string_lossy().into_owned();
            name.ends_with(".json") && !name.contains("model")
        })
        .count();
    assert_eq!(reports, 26);
}
