//! End-to-end tests of the `bridgerank` binary: exit codes, file outputs,
//! and reproducibility of reruns.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn workspace_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .parent()
        .unwrap()
        .parent()
        .unwrap()
        .to_path_buf()
}

fn fixture(name: &str) -> PathBuf {
    workspace_root().join("fixtures").join(name)
}

fn bridgerank(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bridgerank"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn exit_code(output: &Output) -> i32 {
    output.status.code().expect("no signal")
}

fn stderr(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name))
        .unwrap_or_else(|e| panic!("reading {}: {e}", dir.join(name).display()))
}

#[test]
fn cluster_recovers_f2_blobs() {
    let out = tempfile::tempdir().unwrap();
    let output = bridgerank(&[
        "cluster",
        "--votes",
        fixture("f2_votes.csv").to_str().unwrap(),
        "--out",
        out.path().to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&output), 0, "{}", stderr(&output));

    let clustering: serde_json::Value =
        serde_json::from_str(&read(out.path(), "clustering.json")).unwrap();
    assert_eq!(clustering["k"], 2);
    assert!(clustering["silhouette"].as_f64().unwrap() > 0.8);

    let projection = read(out.path(), "projection.csv");
    assert!(projection.starts_with("person_id,x,y,group\n"));
    assert_eq!(projection.lines().count(), 21);

    let manifest: serde_json::Value =
        serde_json::from_str(&read(out.path(), "manifest.json")).unwrap();
    assert_eq!(manifest["command"], "cluster");
}

#[test]
fn malformed_vote_value_exits_2_and_names_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let votes = dir.path().join("votes.csv");
    std::fs::write(&votes, "person_id,item_id,vote\nu1,i1,1\nu2,i1,2\n").unwrap();
    let output = bridgerank(&[
        "cluster",
        "--votes",
        votes.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&output), 2);
    let message = stderr(&output);
    assert!(message.contains(":3:"), "missing line number: {message}");
}

#[test]
fn empty_votes_file_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let votes = dir.path().join("votes.csv");
    std::fs::write(&votes, "person_id,item_id,vote\n").unwrap();
    let output = bridgerank(&[
        "cluster",
        "--votes",
        votes.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&output), 2);
    assert!(stderr(&output).contains("EmptyInput"));
}

#[test]
fn score_emits_f1_signal_values() {
    let out = tempfile::tempdir().unwrap();
    let output = bridgerank(&[
        "score",
        "--votes",
        fixture("f1_votes.csv").to_str().unwrap(),
        "--clustering",
        fixture("f1_clustering.json").to_str().unwrap(),
        "--authors",
        fixture("f1_authors.csv").to_str().unwrap(),
        "--format",
        "json",
        "--out",
        out.path().to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&output), 0, "{}", stderr(&output));

    let csv = read(out.path(), "signals.csv");
    assert!(csv.starts_with("item_id,engagement,diverse_approval,gac,mf_intercept,bimodality\n"));
    let bridge_row: Vec<&str> = csv
        .lines()
        .find(|line| line.starts_with("i_bridge,"))
        .expect("i_bridge row")
        .split(',')
        .collect();
    let gac: f64 = bridge_row[3].parse().unwrap();
    assert!((gac - 0.36).abs() < 1e-9);

    let signals: serde_json::Value =
        serde_json::from_str(&read(out.path(), "signals.json")).unwrap();
    assert!((signals["i_partisan"]["gac"].as_f64().unwrap() - 0.16).abs() < 1e-9);

    let credibility: serde_json::Value =
        serde_json::from_str(&read(out.path(), "credibility.json")).unwrap();
    let scores = credibility["scores"].as_object().unwrap();
    let total: f64 = scores.values().map(|v| v.as_f64().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-9);
}

#[test]
fn score_handles_items_without_votes() {
    let out = tempfile::tempdir().unwrap();
    let extra = out.path().join("extra_items.txt");
    std::fs::write(&extra, "i_fresh\n").unwrap();
    let output = bridgerank(&[
        "score",
        "--votes",
        fixture("f1_votes.csv").to_str().unwrap(),
        "--clustering",
        fixture("f1_clustering.json").to_str().unwrap(),
        "--items",
        extra.to_str().unwrap(),
        "--out",
        out.path().to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&output), 0, "{}", stderr(&output));
    let csv = read(out.path(), "signals.csv");
    let row: Vec<&str> = csv
        .lines()
        .find(|line| line.starts_with("i_fresh,"))
        .expect("fresh item row present")
        .split(',')
        .collect();
    let engagement: f64 = row[1].parse().unwrap();
    let gac: f64 = row[3].parse().unwrap();
    assert_eq!(engagement, 0.5);
    assert_eq!(gac, 0.25);
    assert_eq!(row[5], "", "bimodality should be empty for unrated items");
}

#[test]
fn score_rejects_unknown_person_in_clustering() {
    let out = tempfile::tempdir().unwrap();
    let clustering = out.path().join("clustering.json");
    std::fs::write(
        &clustering,
        serde_json::json!({
            "schema_version": 1,
            "k": 2,
            "labels": {"u1": 0, "u2": 0, "u3": 0, "u4": 1, "u5": 1, "u6": 1, "ghost": 1},
            "centroids": [],
            "silhouette": 0.0,
            "degenerate": false
        })
        .to_string(),
    )
    .unwrap();
    let output = bridgerank(&[
        "score",
        "--votes",
        fixture("f1_votes.csv").to_str().unwrap(),
        "--clustering",
        clustering.to_str().unwrap(),
        "--out",
        out.path().to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&output), 2);
    assert!(stderr(&output).contains("ghost"));
}

#[test]
fn rank_contrast_on_f1() {
    let out = tempfile::tempdir().unwrap();
    let run = |vm: &str, viewer: &str| -> serde_json::Value {
        let output = bridgerank(&[
            "rank",
            "--votes",
            fixture("f1_votes.csv").to_str().unwrap(),
            "--clustering",
            fixture("f1_clustering.json").to_str().unwrap(),
            "--value-model",
            fixture(vm).to_str().unwrap(),
            "--viewer",
            viewer,
            "--candidates",
            "i_partisan,i_bridge,i_unpopular",
            "--out",
            out.path().to_str().unwrap(),
        ]);
        assert_eq!(exit_code(&output), 0, "{}", stderr(&output));
        serde_json::from_str(&read(out.path(), "feed.json")).unwrap()
    };

    let feed = run("value_model_bridging.json", "u4");
    assert_eq!(feed["allocations"][0]["object"], "i_bridge");
    assert_eq!(feed["allocations"][0]["slot"], 1);
    let objects: Vec<&str> = feed["allocations"]
        .as_array()
        .unwrap()
        .iter()
        .map(|a| a["object"].as_str().unwrap())
        .collect();
    assert_eq!(objects, ["i_bridge", "i_partisan", "i_unpopular"]);

    let feed = run("value_model_engagement.json", "u1");
    assert_eq!(feed["allocations"][0]["object"], "i_partisan");
}

#[test]
fn metrics_on_two_cliques_and_delta() {
    let out = tempfile::tempdir().unwrap();
    let output = bridgerank(&[
        "metrics",
        "--graph",
        fixture("two_cliques_graph.json").to_str().unwrap(),
        "--clustering",
        fixture("two_cliques_groups.json").to_str().unwrap(),
        "--tick",
        "0",
        "--out",
        out.path().to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&output), 0, "{}", stderr(&output));
    let report: serde_json::Value =
        serde_json::from_str(&read(out.path(), "report.json")).unwrap();
    assert!((report["values"]["modularity"].as_f64().unwrap() - 0.5).abs() < 1e-9);
    assert!((report["values"]["ei_index"].as_f64().unwrap() + 1.0).abs() < 1e-12);
    assert_eq!(report["values"]["rwc"].as_f64().unwrap(), 1.0);

    // Delta against the tick-0 report, recorded at a later tick.
    let baseline = out.path().join("report.json");
    let later = tempfile::tempdir().unwrap();
    let output = bridgerank(&[
        "metrics",
        "--graph",
        fixture("two_cliques_graph.json").to_str().unwrap(),
        "--clustering",
        fixture("two_cliques_groups.json").to_str().unwrap(),
        "--tick",
        "5",
        "--baseline",
        baseline.to_str().unwrap(),
        "--out",
        later.path().to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&output), 0, "{}", stderr(&output));
    let delta: serde_json::Value =
        serde_json::from_str(&read(later.path(), "delta.json")).unwrap();
    assert_eq!(delta["window"][0], 0);
    assert_eq!(delta["window"][1], 5);
    assert_eq!(delta["deltas"]["modularity"].as_f64().unwrap(), 0.0);
}

fn strip_wall_clock(manifest: &str) -> String {
    manifest
        .lines()
        .filter(|line| !line.contains("wall_clock_ms"))
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn simulate_zero_ticks_and_reruns_are_identical() {
    let config = tempfile::tempdir().unwrap();
    let cfg_path = config.path().join("cfg.json");
    let cfg: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(fixture("sim_small.json")).unwrap())
            .unwrap();
    let mut cfg = cfg;
    cfg["ticks"] = serde_json::json!(0);
    cfg["n_agents"] = serde_json::json!(16);
    std::fs::write(&cfg_path, cfg.to_string()).unwrap();

    let run_into = |dir: &Path| {
        let output = bridgerank(&[
            "simulate",
            "--config",
            cfg_path.to_str().unwrap(),
            "--out",
            dir.to_str().unwrap(),
        ]);
        assert_eq!(exit_code(&output), 0, "{}", stderr(&output));
    };
    let first = tempfile::tempdir().unwrap();
    let second = tempfile::tempdir().unwrap();
    run_into(first.path());
    run_into(second.path());

    // Baseline only: a single tick-0 block in the metrics series.
    let metrics = read(first.path(), "metrics.csv");
    assert!(metrics.lines().skip(1).all(|line| line.starts_with("0,")));
    let deltas: serde_json::Value =
        serde_json::from_str(&read(first.path(), "deltas.json")).unwrap();
    assert!(deltas["deltas"].as_object().unwrap().is_empty());

    for name in ["metrics.csv", "affect.csv", "feeds.jsonl", "world_final.json"] {
        assert_eq!(
            read(first.path(), name),
            read(second.path(), name),
            "{name} differs between reruns"
        );
    }
    assert_eq!(
        strip_wall_clock(&read(first.path(), "manifest.json")),
        strip_wall_clock(&read(second.path(), "manifest.json"))
    );
}

#[test]
fn simulate_seed_sweep_fans_out() {
    let out = tempfile::tempdir().unwrap();
    let config = tempfile::tempdir().unwrap();
    let cfg_path = config.path().join("cfg.json");
    let mut cfg: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(fixture("sim_small.json")).unwrap())
            .unwrap();
    cfg["ticks"] = serde_json::json!(2);
    cfg["n_agents"] = serde_json::json!(16);
    std::fs::write(&cfg_path, cfg.to_string()).unwrap();

    let output = bridgerank(&[
        "simulate",
        "--config",
        cfg_path.to_str().unwrap(),
        "--seed",
        "100",
        "--seeds",
        "2",
        "--out",
        out.path().to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&output), 0, "{}", stderr(&output));
    for seed in [100, 101] {
        let dir = out.path().join(format!("seed_{seed}"));
        assert!(dir.join("metrics.csv").exists());
        assert!(dir.join("manifest.json").exists());
    }
}

#[test]
fn checked_in_f1_fixture_matches_the_canonical_one() {
    let (canonical, _) = bridgerank_core::fixtures::f1();
    let content = std::fs::read_to_string(fixture("f1_votes.csv")).unwrap();
    let parsed =
        bridgerank_core::io::parse_votes_csv(&content, Path::new("f1_votes.csv")).unwrap();
    assert_eq!(parsed.n_votes(), canonical.n_votes());
    for (person, item, value) in canonical.records() {
        assert_eq!(parsed.vote(person, item), Some(value));
    }
}
