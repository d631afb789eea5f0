use std::path::Path;
use std::process::{Command, Output};

fn homtask(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_homtask")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn synth(dir: &Path) {
    let out = homtask(&[
        "synth",
        "--out",
        dir.to_str().unwrap(),
        "--seed",
        "3",
        "--clusters",
        "20,100",
        "--tasks",
        "2",
        "--positive-rate",
        "0.15",
        "--overlap",
        "0.6",
        "--labeled-fraction",
        "0.8",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
}

fn config(dir: &Path) -> String {
    dir.join("config.toml").to_str().unwrap().to_string()
}

#[test]
fn synth_validate_run_succeed() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path());
    for f in ["graph.tsv", "labels.tsv", "config.toml"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let v = homtask(&["validate", "--config", &config(dir.path())]);
    assert_eq!(code(&v), 0, "{}", String::from_utf8_lossy(&v.stderr));
    assert!(!v.stdout.is_empty());

    let r = homtask(&["run", "--config", &config(dir.path()), "--single-group", "--alpha", "0.5", "--beta", "0", "--tau", "1000"]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    assert!(String::from_utf8_lossy(&r.stdout).contains("macro AUC"));
    for f in ["scores.tsv", "metrics.json", "manifest.json"] {
        assert!(dir.path().join("out").join(f).exists(), "{f}");
    }
    let metrics: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("out/metrics.json")).unwrap()).unwrap();
    assert_eq!(metrics["k_folds"], 3);
    assert_eq!(metrics["n_tasks"], 2);
}

#[test]
fn manifest_replay_reproduces_scores() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path());
    let first = homtask(&["run", "--config", &config(dir.path()), "--alpha", "0,1", "--beta", "0,1"]);
    assert_eq!(code(&first), 0, "{}", String::from_utf8_lossy(&first.stderr));
    let manifest = dir.path().join("out/manifest.json");
    let replay_dir = dir.path().join("replay");
    let second = homtask(&["run", "--manifest", manifest.to_str().unwrap(), "--output-dir", replay_dir.to_str().unwrap()]);
    assert_eq!(code(&second), 0, "{}", String::from_utf8_lossy(&second.stderr));
    let a = std::fs::read(dir.path().join("out/scores.tsv")).unwrap();
    let b = std::fs::read(replay_dir.join("scores.tsv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn replay_refuses_changed_inputs() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path());
    let first = homtask(&["run", "--config", &config(dir.path()), "--single-group", "--alpha", "0", "--beta", "0"]);
    assert_eq!(code(&first), 0);
    let labels = dir.path().join("labels.tsv");
    let mut text = std::fs::read_to_string(&labels).unwrap();
    text.push_str("# edited\n");
    std::fs::write(&labels, text).unwrap();
    let manifest = dir.path().join("out/manifest.json");
    let out = homtask(&["run", "--manifest", manifest.to_str().unwrap()]);
    assert_ne!(code(&out), 0);
}

#[test]
fn missing_graph_path_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("config.toml");
    std::fs::write(&cfg, "labels_path = \"labels.tsv\"\nseed = 1\n").unwrap();
    let out = homtask(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("graph_path"));
}

#[test]
fn missing_seed_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path());
    let cfg = std::fs::read_to_string(dir.path().join("config.toml")).unwrap();
    let cfg: String = cfg.lines().filter(|l| !l.starts_with("seed")).map(|l| format!("{l}\n")).collect();
    std::fs::write(dir.path().join("config.toml"), cfg).unwrap();
    let out = homtask(&["run", "--config", &config(dir.path())]);
    assert_eq!(code(&out), 1);
}

#[test]
fn negative_weight_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("graph.tsv"), "a\tb\t1.0\nb\tc\t-0.5\n").unwrap();
    std::fs::write(dir.path().join("labels.tsv"), "a\tt0\t+\nb\tt0\t-\nc\tt0\t-\n").unwrap();
    let out = homtask(&[
        "validate",
        "--graph",
        dir.path().join("graph.tsv").to_str().unwrap(),
        "--labels",
        dir.path().join("labels.tsv").to_str().unwrap(),
        "--seed",
        "1",
    ]);
    assert_eq!(code(&out), 1);
}

#[test]
fn synth_without_seed_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = homtask(&["synth", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 1);
}

#[test]
fn fatal_nonconvergence_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path());
    let out = homtask(&[
        "run",
        "--config",
        &config(dir.path()),
        "--single-group",
        "--alpha",
        "0",
        "--beta",
        "0",
        "--max-sweeps",
        "1",
        "--nonconvergence-fatal",
    ]);
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn unknown_config_field_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path());
    let path = dir.path().join("config.toml");
    let mut cfg = std::fs::read_to_string(&path).unwrap();
    cfg.push_str("not_a_field = 3\n");
    std::fs::write(&path, cfg).unwrap();
    let out = homtask(&["validate", "--config", path.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
}
