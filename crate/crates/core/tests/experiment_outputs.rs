mod common;

use std::fs;
use std::io::BufReader;

use serde_json::json;

use common::{completion, StubServer};
use swarm_core::experiment::{
    read_records, run_experiment, summarize, Backend, ExperimentConfig, ExperimentError, FailureRecord, TopologyEntry,
    ERRORS_FILE, RESULTS_FILE,
};
use swarm_core::graph::TopologyKind;

fn write_dataset(dir: &std::path::Path) -> std::path::PathBuf {
    let path = dir.join("items.jsonl");
    let lines = [
        json!({"id": "a", "question": "What is 2 + 3?", "answer": "5"}),
        json!({"id": "b", "question": "Pick the prime.", "choices": ["4", "6", "7"], "answer": "C"}),
        json!({"id": "c", "question": "What is 10 / 4?", "answer": "2.50"}),
    ];
    fs::write(&path, lines.iter().map(|l| l.to_string() + "\n").collect::<String>()).unwrap();
    path
}

#[test]
fn results_round_trip_and_summaries_agree() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::new(
        write_dataset(dir.path()),
        dir.path().join("out"),
        vec![TopologyEntry::new(TopologyKind::Ring, 5, 2, 0.1), TopologyEntry::new(TopologyKind::Complete, 5, 2, 0.1)],
    );
    cfg.seeds = vec![4, 5];
    let out = run_experiment(&cfg).unwrap();
    assert_eq!(out.records.len(), 2 * 2 * 3);

    let text = fs::read_to_string(cfg.output.join(RESULTS_FILE)).unwrap();
    assert_eq!(text.lines().count(), out.records.len());
    let parsed = read_records(BufReader::new(text.as_bytes())).unwrap();
    assert_eq!(parsed, out.records);
    for (line, record) in text.lines().zip(&parsed) {
        assert_eq!(line, record.to_json_line());
        assert_eq!(record.agreement.len(), cfg.rounds + 1);
    }
    assert_eq!(out.summary.unwrap(), summarize(&parsed).unwrap());
    assert!(!cfg.output.join(ERRORS_FILE).exists());
}

#[test]
fn failed_debates_are_logged_and_reported() {
    let server = StubServer::start(|i, _| {
        if i % 2 == 0 {
            (500, json!({"error": "down"}))
        } else {
            (200, completion("Final answer: 5", 3, 2))
        }
    });
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::new(
        write_dataset(dir.path()),
        dir.path().join("out"),
        vec![TopologyEntry::new(TopologyKind::Complete, 3, 2, 0.1)],
    );
    cfg.agents.backend = Backend::Remote;
    cfg.remote.base_url = server.base_url.clone();
    cfg.remote.max_attempts = 1;
    cfg.remote.backoff_ms = 1;
    cfg.remote.api_key = Some("k".into());
    cfg.rounds = 1;
    cfg.concurrency = Some(1);

    let err = run_experiment(&cfg).unwrap_err();
    assert!(matches!(err, ExperimentError::Failures { .. }), "{err}");
    let errors = fs::read_to_string(cfg.output.join(ERRORS_FILE)).unwrap();
    let failures: Vec<FailureRecord> = errors.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert!(!failures.is_empty());
    assert!(failures.iter().all(|f| f.topology == "complete" && f.error.contains("agent")));
    let results = fs::read_to_string(cfg.output.join(RESULTS_FILE)).unwrap();
    assert_eq!(results.lines().count() + failures.len(), 3);
}

#[test]
fn toml_paths_are_relative_to_the_config() {
    let dir = tempfile::tempdir().unwrap();
    write_dataset(dir.path());
    let path = dir.path().join("run.toml");
    fs::write(
        &path,
        r#"
dataset = "items.jsonl"
output = "out"
seeds = [0, 1]
rounds = 2

[[topologies]]
kind = "small-world"
n = 6
k = 2
p = 0.2

[[topologies]]
name = "sw-bridged"
kind = "small-world"
n = 6
rewire = { mode = "max-divergence", per_round_budget = 2 }
"#,
    )
    .unwrap();
    let cfg = ExperimentConfig::load(&path).unwrap();
    assert_eq!(cfg.dataset, dir.path().join("items.jsonl"));
    let out = run_experiment(&cfg).unwrap();
    let labels: Vec<_> = out.summary.unwrap().rows.into_iter().map(|r| r.topology).collect();
    assert_eq!(labels, vec!["small-world", "sw-bridged"]);
    assert!(out.records.iter().filter(|r| r.topology == "sw-bridged").all(|r| !r.uncertainty.is_empty()));
}
