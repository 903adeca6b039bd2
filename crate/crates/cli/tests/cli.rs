//! Runs the `dsr` binary end to end.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const FIG_OUTAGE: &str = "713-704,720-706,709-708";

/// root 0 -(line 0)- 1 (100 kW fixed load) -(switch 1, open)- 2 (200 kW black-start unit)
const TOY: &str = r#"{
  "header": {"base_kva": 1000, "base_kv": 4.8, "v0": 1.0, "lambda": 0.001},
  "buses": [
    {"id": 0, "kind": "root", "p_min": -500, "p_max": 500, "q_min": -500, "q_max": 500, "v_min": 1.0, "v_max": 1.0},
    {"id": 1, "kind": "load_fixed", "p_min": -100, "p_max": -100, "q_min": -50, "q_max": -50, "v_min": 0.9409, "v_max": 1.0609},
    {"id": 2, "kind": "gen_black_start", "p_min": 0, "p_max": 200, "q_min": -96.8, "q_max": 96.8, "v_min": 0.9409, "v_max": 1.0609, "rating": 200}
  ],
  "edges": [
    {"id": 0, "from": 0, "to": 1, "kind": "in_service", "r": 0.01, "x": 0.01, "p_max": 500, "q_max": 500},
    {"id": 1, "from": 1, "to": 2, "kind": "switch", "r": 0.01, "x": 0.01, "p_max": 500, "q_max": 500, "normally_closed": false}
  ]
}"#;

fn dsr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dsr"))
        .args(args)
        .env_remove("DSR_WORKERS")
        .output()
        .expect("run dsr")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn inspect_graph_reports_counts() {
    let o = dsr(&["inspect-graph", "--builtin-ieee37"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    let head: Vec<&str> = text.lines().take(3).collect();
    assert_eq!(head, ["cycles: 2", "nbs-paths: 21", "bs-paths: 8"]);

    let o = dsr(&["inspect-graph", "--builtin-ieee37", "--json"]);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["cycles"].as_array().unwrap().len(), 2);
    assert_eq!(v["nbs_paths"].as_array().unwrap().len(), 21);
    assert_eq!(v["bs_paths"].as_array().unwrap().len(), 8);
}

#[test]
fn three_line_outage_summary() {
    let o = dsr(&["solve", "--builtin-ieee37", "--fail", FIG_OUTAGE]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.contains("islands: 2"), "{text}");
    assert!(text.contains("PV buses: 710"), "{text}");
    assert!(text.contains("[PV 710]"), "{text}");
    assert!(text.contains("de-energized: 706 725"), "{text}");
    assert!(text.contains("712-722 close"), "{text}");
    assert!(text.contains("validation: pass"), "{text}");
}

#[test]
fn no_outage_needs_no_switching() {
    let o = dsr(&["solve", "--builtin-ieee37", "--json"]);
    assert_eq!(code(&o), 0);
    let doc: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(doc["summary"]["switch_changes"].as_array().unwrap().len(), 0);
    assert!((doc["summary"]["restored_pct"].as_f64().unwrap() - 100.0).abs() < 1e-6);
    assert_eq!(doc["validation"]["pass"], true);
}

#[test]
fn toy_feeder_matches_hand_optimum() {
    let dir = tempfile::tempdir().unwrap();
    let feeder = dir.path().join("toy.json");
    std::fs::write(&feeder, TOY).unwrap();

    // Losing the line leaves only the black-start unit: close the switch and
    // serve 100 kW for one switching operation.
    let o = dsr(&["solve", "--feeder", path(&feeder), "--fail", "0", "--json"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let doc: Value = serde_json::from_slice(&o.stdout).unwrap();
    let obj = doc["plan"]["objective"].as_f64().unwrap();
    assert!((obj - (-0.1 + 0.001)).abs() < 1e-9, "{obj}");
    assert_eq!(doc["plan"]["y"], serde_json::json!([0, 1]));
    assert_eq!(doc["summary"]["pv_buses"], serde_json::json!(["2"]));

    // Losing the open switch changes nothing.
    let o = dsr(&["solve", "--feeder", path(&feeder), "--fail", "1", "--json"]);
    let doc: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((doc["plan"]["objective"].as_f64().unwrap() + 0.1).abs() < 1e-9);

    // Without a penalty the plan is the same here, at objective -0.1.
    let o = dsr(&[
        "solve",
        "--feeder",
        path(&feeder),
        "--fail",
        "0",
        "--lambda",
        "0",
        "--json",
    ]);
    let doc: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((doc["plan"]["objective"].as_f64().unwrap() + 0.1).abs() < 1e-9);
}

#[test]
fn scenario_file_input() {
    let dir = tempfile::tempdir().unwrap();
    let feeder = dir.path().join("toy.json");
    std::fs::write(&feeder, TOY).unwrap();
    let scenario = dir.path().join("s.json");
    std::fs::write(&scenario, r#"{"failed_edges": [0], "switch_state": {"1": 0}}"#).unwrap();
    let o = dsr(&[
        "solve",
        "--feeder",
        path(&feeder),
        "--scenario",
        path(&scenario),
        "--json",
    ]);
    assert_eq!(code(&o), 0);
    let doc: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(doc["scenario"]["x0"], serde_json::json!([1, 0, 0]));
}

#[test]
fn validate_round_trip_and_tampering() {
    let dir = tempfile::tempdir().unwrap();
    let plan = dir.path().join("plan.json");
    let o = dsr(&["solve", "--builtin-ieee37", "--fail", FIG_OUTAGE, "--out", path(&plan)]);
    assert_eq!(code(&o), 0);

    let o = dsr(&["validate", path(&plan)]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("validation: pass"));

    // Close the open tie 736-740 as well: the 708 island gains a cycle.
    let mut doc: Value = serde_json::from_str(&std::fs::read_to_string(&plan).unwrap()).unwrap();
    let tie = doc["feeder"]["edges"]
        .as_array()
        .unwrap()
        .iter()
        .position(|e| e["name"] == "736-740")
        .unwrap();
    doc["plan"]["y"][tie] = Value::from(1);
    let tampered = dir.path().join("tampered.json");
    std::fs::write(&tampered, doc.to_string()).unwrap();
    let o = dsr(&["validate", path(&tampered), "--json"]);
    assert_eq!(code(&o), 5);
    let report: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["pass"], false);
    let checks: Vec<&str> = report["violations"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v["check"].as_str().unwrap())
        .collect();
    assert!(checks.contains(&"radiality"), "{checks:?}");

    let garbage = dir.path().join("garbage.json");
    std::fs::write(&garbage, "{}").unwrap();
    assert_eq!(code(&dsr(&["validate", path(&garbage)])), 2);
}

#[test]
fn export_mps_and_model_dump() {
    let dir = tempfile::tempdir().unwrap();
    let mps = dir.path().join("m.mps");
    let dump = dir.path().join("m.json");
    let o = dsr(&[
        "export-mps",
        "--builtin-ieee37",
        "--fail",
        FIG_OUTAGE,
        "--out",
        path(&mps),
        "--dump-model",
        path(&dump),
    ]);
    assert_eq!(code(&o), 0);
    let text = std::fs::read_to_string(&mps).unwrap();
    assert!(text.starts_with("NAME DSR\n"));
    assert!(text.trim_end().ends_with("ENDATA"));
    let model: Value = serde_json::from_str(&std::fs::read_to_string(&dump).unwrap()).unwrap();
    let vars = model["variables"].as_array().unwrap().len();
    let bounds = text.lines().skip_while(|l| *l != "BOUNDS").skip(1);
    let declared: std::collections::BTreeSet<&str> = bounds.filter_map(|l| l.split_whitespace().nth(2)).collect();
    assert_eq!(declared.len(), vars);

    let o = dsr(&["export-mps", "--builtin-ieee37"]);
    assert!(stdout(&o).starts_with("NAME DSR"));
}

#[test]
fn usage_errors_exit_with_2() {
    assert_eq!(code(&dsr(&["solve"])), 2);
    assert_eq!(code(&dsr(&["solve", "--builtin-ieee37", "--feeder", "x.json"])), 2);
    assert_eq!(code(&dsr(&["solve", "--builtin-ieee37", "--fail", "no-such-edge"])), 2);
    assert_eq!(code(&dsr(&["solve", "--builtin-ieee37", "--lambda", "-1"])), 2);
    assert_eq!(code(&dsr(&["solve", "--feeder", "/nonexistent/feeder.json"])), 2);
    assert_eq!(code(&dsr(&["batch", "--builtin-ieee37", "-n", "0"])), 2);
    assert_eq!(code(&dsr(&["batch", "--builtin-ieee37", "--k", "99"])), 2);
    assert_eq!(code(&dsr(&["no-such-command"])), 2);
    assert_eq!(code(&dsr(&["--help"])), 0);
}

#[test]
fn node_limit_exits_with_4() {
    let o = dsr(&["solve", "--builtin-ieee37", "--fail", FIG_OUTAGE, "--node-limit", "1"]);
    assert_eq!(code(&o), 4, "{}", stdout(&o));
    assert!(stdout(&o).contains("node_limit"));
}

#[test]
fn batch_csvs_repeat_without_timing() {
    let dir = tempfile::tempdir().unwrap();
    let run = |tag: &str, workers: &str| {
        let records = dir.path().join(format!("r{tag}.csv"));
        let aggregates = dir.path().join(format!("a{tag}.csv"));
        let o = Command::new(env!("CARGO_BIN_EXE_dsr"))
            .args([
                "batch",
                "--builtin-ieee37",
                "--k",
                "1,2",
                "-n",
                "3",
                "--seed",
                "7",
                "--no-timing",
            ])
            .args(["--records", path(&records), "--aggregates", path(&aggregates)])
            .env("DSR_WORKERS", workers)
            .output()
            .unwrap();
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        (
            std::fs::read_to_string(records).unwrap(),
            std::fs::read_to_string(aggregates).unwrap(),
        )
    };
    let a = run("a", "1");
    let b = run("b", "2");
    assert_eq!(a, b);
    assert_eq!(a.0.lines().count(), 7);
    assert!(a
        .0
        .starts_with("k,scenario_index,failed_edges,restored_pct,objective,switch_changes,wall_ms,status,valid\n"));
    assert!(a.1.starts_with("k,n,max_ms,median_ms,mean_restored_pct\n"));
    assert!(a.1.lines().skip(1).all(|l| l.contains(",0.000,0.000,")));
}
