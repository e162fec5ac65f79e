//! End-to-end tests of the `exgraph` binary: flag parsing, config merging,
//! output formats, and exit codes.

use std::path::PathBuf;
use std::process::Command;
use std::sync::atomic::{AtomicUsize, Ordering};

static COUNTER: AtomicUsize = AtomicUsize::new(0);

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_exgraph"))
}

fn run(args: &[&str]) -> (i32, String, String) {
    let output = bin().args(args).output().expect("binary runs");
    (
        output.status.code().expect("exit code"),
        String::from_utf8_lossy(&output.stdout).into_owned(),
        String::from_utf8_lossy(&output.stderr).into_owned(),
    )
}

fn temp_file(name: &str, contents: &str) -> PathBuf {
    let k = COUNTER.fetch_add(1, Ordering::Relaxed);
    let path = std::env::temp_dir().join(format!("exgraph-cli-{}-{k}-{name}", std::process::id()));
    std::fs::write(&path, contents).expect("temp file");
    path
}

#[test]
fn alpha_reports_weighted_independence_number() {
    let (code, stdout, _) = run(&["alpha", "--graph", "builtin:chsh"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(v["alpha"], 3.0);
    assert_eq!(v["graph"], "44,44");
    assert_eq!(v["set"].as_array().unwrap().len(), 3);
}

#[test]
fn alpha_accepts_graph_and_weight_files() {
    let graph = temp_file(
        "pentagon.json",
        r#"{ "n": 5, "edges": [[0,1],[1,2],[2,3],[3,4],[0,4]] }"#,
    );
    let weights = temp_file("w.json", "[1, 1, 1, 1, 1]");
    let (code, stdout, _) = run(&[
        "alpha",
        "--graph",
        graph.to_str().unwrap(),
        "--weights",
        weights.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(v["alpha"], 2.0);
}

#[test]
fn invalid_inputs_exit_with_code_three() {
    let (code, _, stderr) = run(&["alpha", "--graph", "builtin:nope"]);
    assert_eq!(code, 3);
    assert!(stderr.contains("invalid input"));

    let (code, _, _) = run(&["alpha", "--graph", "/nonexistent/graph.json"]);
    assert_eq!(code, 3);

    let (code, _, _) = run(&["theta-colored", "--graph", "builtin:chsh", "--level", "9"]);
    assert_eq!(code, 3);

    let (code, _, _) = run(&["alpha", "--bogus"]);
    assert_eq!(code, 3);

    let (code, _, _) = run(&["sweep", "--graph", "builtin:chsh", "--eps-grid", "1:0:0.1"]);
    assert_eq!(code, 3);

    let (code, _, _) = run(&["--help"]);
    assert_eq!(code, 0);
}

#[test]
fn theta_matches_known_pentagon_value() {
    let weights = temp_file("penta.json", "[0, 0, 0.2, 0.2, 0.2, 0.2, 0.2, 0]");
    let (code, stdout, _) = run(&[
        "theta",
        "--graph",
        "builtin:onecolor",
        "--weights",
        weights.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    let theta = v["theta"].as_f64().unwrap();
    assert!((theta - 0.447_213_595).abs() < 1e-6, "theta {theta}");
}

#[test]
fn family_lists_fifteen_classes() {
    let (code, stdout, _) = run(&["family", "--graph", "builtin:chsh"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(v["classes"], 15);
    assert_eq!(v["classes_without_swap"], 27);
    assert_eq!(v["labels"][0], "44,44");
    assert_eq!(v["labels"].as_array().unwrap().len(), 15);
}

#[test]
fn sweep_emits_csv_json_and_svg() {
    let args = [
        "sweep",
        "--graph",
        "builtin:chsh",
        "--path",
        "fig4",
        "--eps-grid",
        "0:1:0.5",
        "--level",
        "1",
    ];
    let (code, csv, _) = run(&args);
    assert_eq!(code, 0);
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "graph_label,epsilon,upper,lower,gap,level,dims,seconds"
    );
    assert_eq!(lines.count(), 3);
    assert!(csv.contains("\"44,44\",0.000000,"));

    let (code, json, _) = run(&[&args[..], &["--format", "json"]].concat());
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 3);
    assert!(rows[0]["upper"].as_f64().unwrap() >= rows[0]["lower"].as_f64().unwrap());

    let out = std::env::temp_dir().join(format!("exgraph-cli-{}-sweep.svg", std::process::id()));
    let (code, _, _) = run(&[
        &args[..],
        &["--format", "svg", "--out", out.to_str().unwrap()],
    ]
    .concat());
    assert_eq!(code, 0);
    let svg = std::fs::read_to_string(&out).unwrap();
    assert!(svg.starts_with("<svg"));
    assert_eq!(svg.matches("<polyline").count(), 1);
    std::fs::remove_file(&out).ok();
}

#[test]
fn config_file_supplies_defaults_and_flags_override() {
    let config = temp_file(
        "cfg.json",
        r#"{ "graph": "builtin:chsh", "level": "1", "eps_grid": "0:1:1" }"#,
    );
    // Config alone: two grid points.
    let (code, csv, _) = run(&["sweep", "--config", config.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert_eq!(csv.lines().count(), 3);
    // The flag overrides the grid but keeps the config's graph and level.
    let (code, csv, _) = run(&[
        "sweep",
        "--config",
        config.to_str().unwrap(),
        "--eps-grid",
        "0:0:1",
    ]);
    assert_eq!(code, 0);
    assert_eq!(csv.lines().count(), 2);
    assert!(csv.lines().nth(1).unwrap().contains(",1,"));

    let bad = temp_file("bad.json", r#"{ "graf": "builtin:chsh" }"#);
    let (code, _, _) = run(&["sweep", "--config", bad.to_str().unwrap()]);
    assert_eq!(code, 3);
}

#[test]
fn membership_rejects_uniform_supraclassical_behavior() {
    let behavior = temp_file("beh.json", "[0.43,0.43,0.43,0.43,0.43,0.43,0.43,0.43]");
    let (code, stdout, _) = run(&[
        "membership",
        "--graph",
        "builtin:chsh",
        "--behavior",
        behavior.to_str().unwrap(),
        "--set",
        "classical",
    ]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(v["member"], false);

    let uniform = temp_file("beh2.json", "[0.25,0.25,0.25,0.25,0.25,0.25,0.25,0.25]");
    let (code, stdout, _) = run(&[
        "membership",
        "--graph",
        "builtin:chsh",
        "--behavior",
        uniform.to_str().unwrap(),
        "--set",
        "classical",
    ]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(v["member"], true);
}

#[test]
fn kink_on_straight_ansatz_curve_is_empty() {
    let (code, stdout, _) = run(&[
        "kink",
        "--graph",
        "builtin:chsh",
        "--eps-grid",
        "0:1:0.25",
        "--level",
        "1",
        "--curve",
        "lower",
    ]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(v["kinks"].as_array().unwrap().len(), 0);
    assert_eq!(v["curve"].as_array().unwrap().len(), 5);
}

#[test]
fn dilate_check_passes_on_random_instances() {
    let (code, stdout, _) = run(&["dilate-check", "--dim", "4", "--trials", "2", "--seed", "9"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(v["ok"], true);
    assert!(v["worst_residual"].as_f64().unwrap() <= 1e-8);
    assert_eq!(v["reports"].as_array().unwrap().len(), 2);
}
