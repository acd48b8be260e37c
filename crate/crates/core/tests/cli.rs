mod common;

use std::process::{Command, Output};

fn synchro(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_synchro"))
        .args(args)
        .env_remove("SYNCHRO_NODE_CAP")
        .output()
        .expect("binary runs")
}

fn model(file: &str) -> String {
    common::model_path(file).to_string_lossy().into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn check_commit_is_synchronizable() {
    let o = synchro(&["check", &model("commit.mps"), "-k", "1"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("Synchronizable(1)"));
}

#[test]
fn check_dashed_elevator_violates_at_one() {
    let o = synchro(&[
        "check",
        &model("elevator_dashed.mps"),
        "-k",
        "1",
        "--format",
        "json",
        "--stable",
    ]);
    assert_eq!(o.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["result"], "violation");
    assert_eq!(v["cycle"].as_array().unwrap().len(), 2);
    assert_eq!(v["stats"]["time_ms"], 0);
}

#[test]
fn stable_output_is_byte_identical() {
    let args = [
        "check",
        &model("elevator_dashed.mps"),
        "-k",
        "1",
        "--format",
        "json",
        "--stable",
    ];
    assert_eq!(synchro(&args).stdout, synchro(&args).stdout);
    let par = [
        "--jobs",
        "2",
        "check",
        &model("elevator_dashed.mps"),
        "-k",
        "1",
        "--format",
        "json",
        "--stable",
    ];
    assert_eq!(synchro(&args).stdout, synchro(&par).stdout);
}

#[test]
fn text_and_json_agree() {
    for (file, k) in [("elevator_dashed.mps", "1"), ("elevator_dashed.mps", "2")] {
        let text = stdout(&synchro(&["check", &model(file), "-k", k]));
        let json: serde_json::Value =
            serde_json::from_slice(&synchro(&["check", &model(file), "-k", k, "--format", "json"]).stdout).unwrap();
        let result = json["result"].as_str().unwrap();
        assert_eq!(text.starts_with("Violation"), result == "violation");
        assert_eq!(text.starts_with("Synchronizable"), result == "synchronizable");
    }
}

#[test]
fn usage_and_parse_errors_exit_3() {
    assert_eq!(synchro(&["check", "missing.mps", "-k", "1"]).status.code(), Some(3));
    assert_eq!(
        synchro(&["check", &model("commit.mps"), "-k", "0"]).status.code(),
        Some(3)
    );
    assert_eq!(synchro(&["check", &model("commit.mps")]).status.code(), Some(3));
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.mps");
    std::fs::write(
        &bad,
        "system x\npayloads a\nprocess p initial s\n  state s\n    recv zzz goto s\nend\n",
    )
    .unwrap();
    let o = synchro(&["check", bad.to_str().unwrap(), "-k", "1"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("zzz"));
}

#[test]
fn min_k_reports_bounds_and_cap() {
    let o = synchro(&["min-k", &model("commit.mps")]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("cap: 16"));
    assert!(out.contains("m: receive_bound=2 send_bound=2"));
    assert!(out.ends_with("Synchronizable(1)\n"));
}

#[test]
fn min_k_needs_cap_without_flow_bounds() {
    let o = synchro(&["min-k", &model("decid_ex.mps")]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("flow-bounded"));
    let o = synchro(&["min-k", &model("decid_ex.mps"), "--cap", "2"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn min_k_replication() {
    let o = synchro(&["min-k", &model("replication.mps")]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).ends_with("Synchronizable(4)\n"));
}

#[test]
fn trace_rs_cycle_is_bad() {
    let o = synchro(&["trace", &model("rs_cycle.trace"), "-k", "4"]);
    assert_eq!(o.status.code(), Some(1));
    let out = stdout(&o);
    assert!(out.starts_with("not 4-synchronous: bad cycle"));
    assert!(out.contains("digraph conflict"));
    assert!(out.contains("style=bold"));
}

#[test]
fn trace_without_causal_delivery_exits_2() {
    let o = synchro(&["trace", &model("causal_violated.trace"), "-k", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(
        synchro(&["trace", &model("causal_ok.trace"), "-k", "1"]).status.code(),
        Some(0)
    );
}

#[test]
fn reach_commit_done() {
    let o = synchro(&["reach", &model("commit.mps"), "-k", "1", "-p", "c", "-s", "Done"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("reachable\nwitness: send(c,m,update)#1"));
    let o = synchro(&["reach", &model("commit.mps"), "-k", "1", "-p", "c", "-s", "Nowhere"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn deadlock_mutual_wait() {
    let o = synchro(&[
        "deadlock",
        &model("mutual_wait.mps"),
        "-k",
        "1",
        "--kind",
        "empty-buffer",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("waiting: p, q"));
    let o = synchro(&["deadlock", &model("commit.mps"), "-k", "1", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["reports"], serde_json::json!([]));
}

#[test]
fn graph_exports() {
    let o = synchro(&["graph", &model("producer_consumer.mps"), "-k", "1", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["configs"].as_array().unwrap().len(), 2);
    let o = synchro(&["graph", &model("producer_consumer.mps"), "-k", "1"]);
    assert!(stdout(&o).starts_with("digraph reach"));
}

#[test]
fn node_cap_from_environment() {
    let o = Command::new(env!("CARGO_BIN_EXE_synchro"))
        .args(["check", &model("replication.mps"), "-k", "4"])
        .env("SYNCHRO_NODE_CAP", "10")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn self_send_warns() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("self.mps");
    std::fs::write(
        &f,
        "system x\npayloads a\nprocess p initial s\n  state s\n    send a to p goto s\n    recv a goto s\nend\n",
    )
    .unwrap();
    let o = synchro(&["check", f.to_str().unwrap(), "-k", "1"]);
    assert!(String::from_utf8_lossy(&o.stderr).contains("sends to itself"));
}
