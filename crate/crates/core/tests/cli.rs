//! End-to-end checks of the command-line binary: output layout, byte-level
//! determinism across invocations, config-file precedence, and exit codes.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_manifold-gp");

fn wine() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/wine.csv")
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn run_ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "command {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).expect("utf8 stdout")
}

fn evolve_small(out_dir: &Path, seed: &str) {
    run_ok(&[
        "evolve",
        "--data",
        wine().to_str().unwrap(),
        "--label",
        "last",
        "--seed",
        seed,
        "--generations",
        "8",
        "--population",
        "16",
        "--neighbors-k",
        "2",
        "--snapshot-every",
        "4",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
}

#[test]
fn schedule_prints_frozen_positions() {
    let out = run_ok(&["schedule", "--n", "100", "--k", "2"]);
    assert_eq!(out.trim(), "1,2,4,6,10,14,22,30,46,62,94");
}

#[test]
fn evolve_writes_expected_layout() {
    let tmp = tempfile::tempdir().unwrap();
    evolve_small(tmp.path(), "3");
    let seed_dir = tmp.path().join("seed3");

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(seed_dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["status"], "ok");
    assert_eq!(manifest["seed"], 3);
    assert_eq!(manifest["offspring_evaluations"], 16 * 8);
    assert_eq!(manifest["num_features"], 13);
    // snapshot schedule: generation 0, every 4th, and the final generation
    let generations: Vec<u64> = manifest["snapshots"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s["generation"].as_u64().unwrap())
        .collect();
    assert_eq!(generations, vec![0, 4, 8]);

    let archive = fs::read_to_string(seed_dir.join("archive.csv")).unwrap();
    let mut lines = archive.lines();
    assert_eq!(lines.next(), Some("t,cost"));
    let mut prev_t = 0usize;
    let mut prev_cost = f64::INFINITY;
    for line in lines {
        let (t, cost) = line.split_once(',').unwrap();
        let t: usize = t.parse().unwrap();
        let cost: f64 = cost.parse().unwrap();
        assert!(t > prev_t, "tree counts strictly increase");
        assert!(cost < prev_cost, "costs strictly decrease");
        // every archive row has a matching serialized individual
        let trees = fs::read_to_string(seed_dir.join(format!("t{t}.trees"))).unwrap();
        assert_eq!(trees.lines().filter(|l| !l.trim().is_empty()).count(), t);
        prev_t = t;
        prev_cost = cost;
    }
    assert!(prev_t >= 1, "archive is non-empty");
    assert!(tmp.path().join("neighbors.cache").exists());
}

#[test]
fn evolve_is_byte_deterministic_across_invocations() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    evolve_small(a.path(), "11");
    evolve_small(b.path(), "11");
    for name in ["archive.csv", "population.csv"] {
        let lhs = fs::read(a.path().join("seed11").join(name)).unwrap();
        let rhs = fs::read(b.path().join("seed11").join(name)).unwrap();
        assert_eq!(lhs, rhs, "{name} differs between identical runs");
    }
    for entry in fs::read_dir(a.path().join("seed11")).unwrap().flatten() {
        let name = entry.file_name().into_string().unwrap();
        if name.ends_with(".trees") {
            let lhs = fs::read(entry.path()).unwrap();
            let rhs = fs::read(b.path().join("seed11").join(&name)).unwrap();
            assert_eq!(lhs, rhs, "{name} differs between identical runs");
        }
    }
}

#[test]
fn multi_seed_runs_get_separate_directories() {
    let tmp = tempfile::tempdir().unwrap();
    run_ok(&[
        "evolve",
        "--data",
        wine().to_str().unwrap(),
        "--seed",
        "1,2",
        "--generations",
        "4",
        "--population",
        "12",
        "--neighbors-k",
        "2",
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert!(tmp.path().join("seed1/archive.csv").exists());
    assert!(tmp.path().join("seed2/archive.csv").exists());
}

#[test]
fn apply_round_trips_an_archived_individual() {
    let tmp = tempfile::tempdir().unwrap();
    evolve_small(tmp.path(), "5");
    let seed_dir = tmp.path().join("seed5");
    let model = fs::read_dir(&seed_dir)
        .unwrap()
        .flatten()
        .map(|e| e.path())
        .find(|p| p.extension().is_some_and(|e| e == "trees"))
        .expect("archive holds at least one individual");

    let embedding_path = tmp.path().join("embedding.csv");
    let dot_path = tmp.path().join("trees.dot");
    run_ok(&[
        "apply",
        "--model",
        model.to_str().unwrap(),
        "--data",
        wine().to_str().unwrap(),
        "--out",
        embedding_path.to_str().unwrap(),
        "--dot",
        dot_path.to_str().unwrap(),
    ]);

    let t: usize = model.file_stem().unwrap().to_str().unwrap()[1..].parse().unwrap();
    let embedding = fs::read_to_string(&embedding_path).unwrap();
    let mut lines = embedding.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(header.len(), t);
    assert_eq!(header[0], "e1");
    assert_eq!(lines.count(), 178);

    let dot = fs::read_to_string(&dot_path).unwrap();
    assert_eq!(dot.matches("digraph").count(), t);
}

#[test]
fn evaluate_scores_every_run_directory() {
    let tmp = tempfile::tempdir().unwrap();
    run_ok(&[
        "evolve",
        "--data",
        wine().to_str().unwrap(),
        "--seed",
        "1,2",
        "--generations",
        "6",
        "--population",
        "12",
        "--neighbors-k",
        "2",
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    run_ok(&[
        "evaluate",
        "--data",
        wine().to_str().unwrap(),
        "--run",
        tmp.path().to_str().unwrap(),
    ]);

    for dir in ["seed1", "seed2", ""] {
        let base = tmp.path().join(dir);
        let report = fs::read_to_string(base.join("front_report.csv")).unwrap();
        assert!(report.starts_with("t,cost,knn_train,knn_test,pca_knn_test\n"));
        let summary: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(base.join("summary.json")).unwrap()).unwrap();
        let hv = summary["hypervolume_gp"].as_f64().unwrap();
        assert!((0.0..=1.0).contains(&hv), "hypervolume {hv} in unit square");
        assert!(summary["hypervolume_pca"].as_f64().unwrap() <= 1.0);
    }
}

#[test]
fn config_file_fills_gaps_and_flags_take_precedence() {
    let tmp = tempfile::tempdir().unwrap();
    let config_path = tmp.path().join("run.conf");
    fs::write(
        &config_path,
        format!(
            "# small smoke configuration\n\
             data = {}\n\
             seed = 9\n\
             generations = 100\n\
             population = 12\n\
             neighbors-k = 2\n\
             out = {}\n",
            wine().display(),
            tmp.path().join("runs").display()
        ),
    )
    .unwrap();
    // the flag overrides the config's generations=100
    run_ok(&["evolve", "--config", config_path.to_str().unwrap(), "--generations", "3"]);
    let manifest: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(tmp.path().join("runs/seed9/manifest.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(manifest["generations"], 3);
    assert_eq!(manifest["population"], 12);
    assert_eq!(manifest["offspring_evaluations"], 36);
}

#[test]
fn usage_errors_exit_two() {
    let cases: Vec<Vec<String>> = vec![
        vec!["evolve".into()], // no data source at all
        vec![
            "evolve".into(),
            "--data".into(),
            "/definitely/not/here.csv".into(),
        ],
        vec!["schedule".into(), "--n".into(), "1".into(), "--k".into(), "2".into()],
    ];
    for case in cases {
        let args: Vec<&str> = case.iter().map(String::as_str).collect();
        let out = run(&args);
        assert_eq!(out.status.code(), Some(2), "expected usage exit for {args:?}");
    }

    let tmp = tempfile::tempdir().unwrap();
    let config_path = tmp.path().join("bad.conf");
    fs::write(&config_path, "populaton = 10\n").unwrap();
    let out = run(&["evolve", "--config", config_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "unknown config key is a usage error");
    assert!(String::from_utf8_lossy(&out.stderr).contains("populaton"));
}

#[test]
fn evaluate_without_labels_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    evolve_small(tmp.path(), "1");
    let out = run(&[
        "evaluate",
        "--data",
        wine().to_str().unwrap(),
        "--label",
        "none",
        "--run",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}
