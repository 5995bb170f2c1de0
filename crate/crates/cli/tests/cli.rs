use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};

use cttts_core::instance::{Family, ProblemInstance, GAUSSIAN_THETA_BOX};

fn cttts(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cttts")).args(args).env_remove("CTTTS_THREADS").output().unwrap()
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn write(dir: &Path, name: &str, value: &Value) -> String {
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_string_pretty(value).unwrap()).unwrap();
    path.to_str().unwrap().to_string()
}

fn small_config(out: &Path) -> Value {
    json!({
        "instance": { "generator": "gaussian", "seed": 3, "contexts": 2, "designs": 3, "m": 1 },
        "policies": [{ "name": "tttsc-coin" }, { "name": "ea" }],
        "budget": 120,
        "reps": 3,
        "checkpoints": [60, 90, 120],
        "out": out,
    })
}

#[test]
fn run_writes_csv_and_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("out/curves.csv");
    let config = write(dir.path(), "run.json", &small_config(&csv));
    let out = cttts(&["run", "--config", &config]);
    let doc = stdout_json(&out);
    assert_eq!(doc["rows"], 6);
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 7);
    assert_eq!(text.lines().next().unwrap(), "policy,checkpoint,pcs,pcs_se,pcsw,pcsw_se,pcse,pcse_se,reps");
    let meta: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/curves.meta.json")).unwrap()).unwrap();
    assert!(meta["wall_time_seconds"].as_f64().unwrap() >= 0.0);
    assert_eq!(meta["config"]["budget"], 120);
    assert!(meta["versions"]["cttts"].is_string());
}

#[test]
fn flags_override_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "run.json", &small_config(&dir.path().join("a.csv")));
    let other = dir.path().join("b.csv");
    let out = cttts(&["run", "--config", &config, "--out", other.to_str().unwrap(), "--reps", "2", "--seed", "9"]);
    stdout_json(&out);
    let text = std::fs::read_to_string(&other).unwrap();
    assert!(text.lines().nth(1).unwrap().ends_with(",2"));
    assert!(!dir.path().join("a.csv").exists());
}

#[test]
fn malformed_json_reports_line_and_column() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, "{\n  \"budget\": 10,\n  \"reps\": ,\n}").unwrap();
    let out = cttts(&["run", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 3, column"), "{err}");
}

#[test]
fn unknown_policy_lists_valid_names() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = small_config(&dir.path().join("x.csv"));
    config["policies"] = json!([{ "name": "ttts" }]);
    let path = write(dir.path(), "run.json", &config);
    let out = cttts(&["run", "--config", &path]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    for name in ["aoamc", "boldmc", "ea", "tttsc-coin", "tttsc-tune"] {
        assert!(err.contains(name), "{err}");
    }
}

#[test]
fn unknown_keys_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = small_config(&dir.path().join("x.csv"));
    config["budgett"] = json!(5);
    let path = write(dir.path(), "run.json", &config);
    assert_eq!(cttts(&["run", "--config", &path]).status.code(), Some(1));
}

#[test]
fn replication_failures_exit_2_with_the_index() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = small_config(&dir.path().join("x.csv"));
    // One initial sample leaves the sample variance undefined.
    config["policies"] = json!([{ "name": "boldmc" }]);
    config["init_per_design"] = json!(1);
    config["checkpoints"] = json!([120]);
    let path = write(dir.path(), "run.json", &config);
    let out = cttts(&["run", "--config", &path]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("replication 0"), "{err}");
}

#[test]
fn thread_variable_must_be_a_number() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "run.json", &small_config(&dir.path().join("x.csv")));
    let out = Command::new(env!("CARGO_BIN_EXE_cttts"))
        .args(["run", "--config", &path])
        .env("CTTTS_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn rates_examples() {
    let doc = stdout_json(&cttts(&[
        "rates", "--family", "gaussian-known-var", "--theta", "1,1", "--theta-prime", "0,1", "--psi", "0.5,0.5",
    ]));
    assert!((doc["rate"].as_f64().unwrap() - 0.25).abs() < 1e-15);
    assert!((doc["crossing"].as_f64().unwrap() - 0.5).abs() < 1e-15);
    let doc = stdout_json(&cttts(&[
        "rates", "--family", "gaussian-known-var", "--theta", "1,1", "--theta-prime", "0,1", "--psi", "0.5,0",
    ]));
    assert_eq!(doc["rate"].as_f64().unwrap(), 0.0);
    let doc = stdout_json(&cttts(&["rates", "--family", "gaussian", "--theta", "0.3,2", "--theta-prime", "0.3,2", "--kl"]));
    assert_eq!(doc["kl"].as_f64().unwrap(), 0.0);
    let doc = stdout_json(&cttts(&[
        "rates", "--family", "weibull-censored", "--theta", "100,3", "--theta-prime", "100,3", "--tau", "150", "--kl",
    ]));
    assert!(doc["kl"].as_f64().unwrap().abs() < 1e-12);
    assert_eq!(cttts(&["rates", "--family", "cauchy", "--psi", "0.5,0.5"]).status.code(), Some(1));
    let bad = cttts(&["rates", "--family", "gaussian", "--theta", "0,-1", "--theta-prime", "0,1", "--kl"]);
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn policy_prob_two_designs() {
    let doc = stdout_json(&cttts(&["policy-prob", "--pi", "[[0.9, 0.1]]", "--gamma", "0.5"]));
    for v in doc["psi"][0].as_array().unwrap() {
        assert!((v.as_f64().unwrap() - 0.5).abs() < 1e-12);
    }
    assert_eq!(cttts(&["policy-prob", "--pi", "[[0.9, 0.1]]"]).status.code(), Some(1));
}

fn instance_file(dir: &Path, contexts: Vec<Vec<(f64, f64)>>, m: Vec<usize>) -> String {
    let inst = ProblemInstance::new(Family::Gaussian, contexts, m, None, GAUSSIAN_THETA_BOX).unwrap();
    let path = dir.join("instance.json");
    inst.save(&path).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn solve_symmetric_two_design_context() {
    let dir = tempfile::tempdir().unwrap();
    let path = instance_file(dir.path(), vec![vec![(1.0, 1.0), (-1.0, 1.0)]], vec![1]);
    let doc = stdout_json(&cttts(&["solve-allocation", "--input", &path]));
    assert!((doc["gamma"][0].as_f64().unwrap() - 0.5).abs() < 1e-3, "{doc}");
    assert_eq!(doc["method"], "best");
}

#[test]
fn best_and_topm_paths_agree_for_single_targets() {
    let dir = tempfile::tempdir().unwrap();
    let path = instance_file(
        dir.path(),
        vec![vec![(1.0, 1.0), (0.2, 2.0), (-0.7, 1.5)], vec![(0.5, 1.0), (0.0, 0.5)]],
        vec![1, 1],
    );
    let best = stdout_json(&cttts(&["solve-allocation", "--input", &path, "--method", "best"]));
    let topm = stdout_json(&cttts(&["solve-allocation", "--input", &path, "--method", "topm"]));
    let (a, b) = (best["value"].as_f64().unwrap(), topm["value"].as_f64().unwrap());
    assert!((a - b).abs() <= 1e-4 * a, "{a} vs {b}");
    let wider = stdout_json(&cttts(&["solve-allocation", "--input", &path, "--m", "2,1"]));
    assert_eq!(wider["method"], "topm");
}
