use std::path::PathBuf;
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures").join(name)
}

fn hvbta(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hvbta")).args(args).output().expect("binary runs")
}

fn path_str(p: &std::path::Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn run_table1_json() {
    let out = hvbta(&["run", path_str(&fixture("table1.json")), "--seed", "7"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["assignment"]["Place Wall Panel"], "A");
    assert_eq!(v["assignment"]["Transport Module"], "C");
    assert_eq!(v["idle_agents"], serde_json::json!(["B"]));
    assert_eq!(v["planning"]["status"], "solved");
    assert_eq!(v["settings"]["seed"], 7);
    assert_eq!(v["paths"].as_array().unwrap().len(), 2);
}

#[test]
fn csv_out_and_svg() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("r.csv");
    let svg = dir.path().join("r.svg");
    let out = hvbta(&[
        "run",
        path_str(&fixture("table1.json")),
        "--format",
        "csv",
        "--out",
        path_str(&csv),
        "--svg",
        path_str(&svg),
    ]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 4);
    assert!(text.ends_with("# idle agents: B\n"));
    let svg = std::fs::read_to_string(&svg).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 2);
}

#[test]
fn assign_stops_before_planning() {
    let out = hvbta(&["assign", path_str(&fixture("table1.json"))]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["planning"]["status"], "skipped");
    assert_eq!(v["paths"], serde_json::json!([]));
}

#[test]
fn plan_uses_embedded_assignment() {
    let dir = tempfile::tempdir().unwrap();
    let mut doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(fixture("table1.json")).unwrap()).unwrap();
    doc["assignment"] = serde_json::json!({"Transport Module": "B"});
    let path = dir.path().join("s.json");
    std::fs::write(&path, doc.to_string()).unwrap();
    let out = hvbta(&["plan", path_str(&path)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["paths"][0]["agent"], "B");
    assert_eq!(v["matrix"], serde_json::Value::Null);

    // Without an assignment `plan` has nothing to do.
    let out = hvbta(&["plan", path_str(&fixture("table1.json"))]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn validation_failure_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let mut doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(fixture("table1.json")).unwrap()).unwrap();
    doc["agents"][1]["start"] = serde_json::json!([0, 0]);
    let path = dir.path().join("bad.json");
    std::fs::write(&path, doc.to_string()).unwrap();

    let out = hvbta(&["validate", path_str(&path)]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "B: start-collision (start (0,0) shared with agent A)");

    let out = hvbta(&["run", path_str(&path)]);
    assert_eq!(out.status.code(), Some(2));

    std::fs::write(&path, "{not json").unwrap();
    assert_eq!(hvbta(&["validate", path_str(&path)]).status.code(), Some(2));

    let out = hvbta(&["validate", path_str(&fixture("table1.json"))]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn unsolvable_exits_3_with_partial_report() {
    let dir = tempfile::tempdir().unwrap();
    let doc = serde_json::json!({
        "map": "..",
        "agents": [
            {"id": "P", "start": [0, 0], "capabilities": {"reach": {"quantity": {"value": 1, "unit": "m"}}}},
            {"id": "Q", "start": [1, 0], "capabilities": {"reach": {"quantity": {"value": 1, "unit": "m"}}}}
        ],
        "tasks": [
            {"id": "East", "goal": [1, 0], "requirements": [{"dimension": "reach", "kind": "numeric-min", "value": {"value": 1, "unit": "m"}}]},
            {"id": "West", "goal": [0, 0], "requirements": [{"dimension": "reach", "kind": "numeric-min", "value": {"value": 1, "unit": "m"}}]}
        ],
        "assignment": {"East": "P", "West": "Q"},
        "config": {"max_ct_nodes": 200}
    });
    let path = dir.path().join("swap.json");
    std::fs::write(&path, doc.to_string()).unwrap();
    let out = hvbta(&["plan", path_str(&path)]);
    assert_eq!(out.status.code(), Some(3));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["planning"]["status"], "unsolvable");
}

#[test]
fn bad_flags_rejected() {
    let t = fixture("table1.json");
    assert_eq!(hvbta(&["run", path_str(&t), "--approval-threshold", "1.5"]).status.code(), Some(1));
    assert_eq!(hvbta(&["run", path_str(&t), "--ecbs-w", "0.5"]).status.code(), Some(1));
    assert!(!hvbta(&["run", path_str(&t), "--format", "xml"]).status.success());
}

#[test]
fn cache_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache.json");
    let a = fixture("anchoring.json");
    let first = hvbta(&["run", path_str(&a), "--cache", path_str(&cache)]);
    assert!(first.status.success());
    let stored: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&cache).unwrap()).unwrap();
    assert_eq!(stored.as_object().unwrap().len(), 2);

    let second = hvbta(&["run", path_str(&a), "--cache", path_str(&cache)]);
    let v: serde_json::Value = serde_json::from_slice(&second.stdout).unwrap();
    assert_eq!(v["metrics"]["adjudicator_cache_hits"], 2);
    assert_eq!(v["metrics"]["adjudicator_calls"], 0);
    assert_eq!(v["assignment"]["Hold Module"], "H");
}

#[test]
fn config_file_and_remote_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    // The remote endpoint is unreachable, so every adjudication falls back to 0.5.
    std::fs::write(
        &cfg,
        r#"{"backend": "remote", "retry_limit": 1, "remote": {"base_url": "http://127.0.0.1:9", "timeout_secs": 1}}"#,
    )
    .unwrap();
    let out = hvbta(&[
        "assign",
        path_str(&fixture("anchoring.json")),
        "--config",
        path_str(&cfg),
        "--api-key-env",
        "HVBTA_TEST_UNSET_KEY",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["settings"]["backend"], "remote");
    assert_eq!(v["metrics"]["adjudicator_fallbacks"], 2);
}
