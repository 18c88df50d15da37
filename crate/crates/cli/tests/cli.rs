use serde_json::Value;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_anisoweight"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn json(args: &[&str]) -> Value {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn run_to(args: &[&str], path: &Path) -> Vec<u8> {
    let mut a: Vec<&str> = args.to_vec();
    a.extend(["--out", path.to_str().unwrap()]);
    let out = run(&a);
    assert!(out.status.code() == Some(0), "{a:?}: {}", String::from_utf8_lossy(&out.stderr));
    std::fs::read(path).unwrap()
}

#[test]
fn classify_doubling_witness() {
    let v = json(&["classify", "--theta", "0,5,0", "--n", "2", "--p", "2"]);
    let r = &v["result"];
    assert_eq!(r["is_doubling"], true);
    assert_eq!(r["ap"][0]["holds"], false);
    assert_eq!(r["witness"][0]["flag"], "ap[2]");
    let out = run(&["classify", "--theta", "0,5,0", "--n", "2", "--p", "2", "--format", "csv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let row = text.lines().find(|l| l.starts_with("ap[2],")).unwrap();
    assert!(row.starts_with("ap[2],false,") && row.len() > "ap[2],false,".len(), "{row}");
}

#[test]
fn classify_unweighted_all_hold() {
    let out = run(&["classify", "--theta", "0,0,0", "--n", "3", "--p", "2", "--format", "csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
    assert!(rows.len() >= 3);
    assert!(rows.iter().all(|r| r.split(',').nth(1) == Some("true")), "{text}");
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(run(&["classify", "--theta", "0,5,0", "--p", "2"]).status.code(), Some(2));
    assert_eq!(run(&["classify", "--theta", "0,5", "--n", "2", "--p", "2"]).status.code(), Some(2));
    assert_eq!(run(&["measure", "--bogus"]).status.code(), Some(2));
    assert_eq!(run(&["solve", "--preset", "nope"]).status.code(), Some(2));
    assert_eq!(run(&["ap-scan", "--theta", "0,0,0", "--n", "2", "--p", "0.5"]).status.code(), Some(2));
}

#[test]
fn analysis_failure_exits_1() {
    // |x_n|^{-1} is not locally integrable, so the A_2 quotient is infinite
    let args = ["ap-scan", "--theta", "0,0,1", "--n", "2", "--p", "2", "--count", "12"];
    assert_eq!(run(&args).status.code(), Some(0));
    let mut strict = args.to_vec();
    strict.push("--require");
    assert_eq!(run(&strict).status.code(), Some(1));
    // A_2 fails at the endpoint θ1 = (n−1)(p−1)
    assert_eq!(run(&["solve", "--theta", "1,0,0", "--n", "2", "--p", "2"]).status.code(), Some(1));
}

#[test]
fn measure_scaling_slope() {
    let v = json(&["measure", "--theta", "1,-0.5,0.25", "--n", "3", "--fit-scaling"]);
    let slope = v["result"]["scaling"]["slope"].as_f64().unwrap();
    assert!((slope - 3.75).abs() <= 1e-2, "{slope}");
}

#[test]
fn manufactured_solve_then_decay() {
    let dir = tempfile::tempdir().unwrap();
    let field = dir.path().join("u.json");
    let v = json(&["solve", "--preset", "manufactured-p2", "--field-out", field.to_str().unwrap()]);
    assert_eq!(v["result"]["report"]["converged"], true);
    assert!(field.exists());
    let v = json(&["decay", "--preset", "manufactured-p2", "--require"]);
    let order = v["result"]["min_order"].as_f64().unwrap();
    assert!(order >= 1.8, "{order}");
    assert_eq!(v["result"]["levels"].as_array().unwrap().len(), 4);
    let v = json(&["decay", "--field", field.to_str().unwrap(), "--fit-min", "0.05", "--fit-max", "0.5"]);
    assert!(v["result"]["levels"][0]["fit"]["alpha"].as_f64().unwrap() > 0.0);
}

#[test]
fn outputs_embed_version_and_config() {
    let v = json(&["classify", "--theta", "0,1,0", "--n", "2", "--p", "3", "--seed", "4"]);
    assert!(v["version"].as_str().unwrap().starts_with("anisoweight "));
    assert_eq!(v["config"]["subcommand"], "classify");
    assert_eq!(v["config"]["seed"], 4);
    let out = run(&["classify", "--theta", "0,1,0", "--n", "2", "--p", "3", "--format", "csv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# version: anisoweight "));
    let cfg: Value = serde_json::from_str(lines.next().unwrap().strip_prefix("# config: ").unwrap()).unwrap();
    assert_eq!(cfg["theta"][1], 1.0);
}

#[test]
fn config_file_with_flag_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.toml");
    std::fs::write(&path, "theta = [0.0, 2.0, 0.0]\nn = 3\np = 2.0\n").unwrap();
    let v = json(&["classify", "--config", path.to_str().unwrap(), "--n", "2"]);
    assert_eq!(v["config"]["n"], 2);
    assert_eq!(v["config"]["theta"][1], 2.0);

    std::fs::write(&path, "theta = [0.0, 2.0, 0.0]\nn = 3\nwhat = 1\n").unwrap();
    assert_eq!(run(&["classify", "--config", path.to_str().unwrap()]).status.code(), Some(2));

    std::fs::write(&path, "subcommand = \"measure\"\ntheta = [0.0, 0.0, 0.0]\nn = 2\np = 2.0\n").unwrap();
    assert_eq!(run(&["classify", "--config", path.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn saved_config_reproduces_run() {
    let dir = tempfile::tempdir().unwrap();
    let saved = dir.path().join("saved.toml");
    let args = [
        "doubling-scan", "--theta", "0.5,-0.5,0.25", "--n", "3", "--count", "24", "--seed", "3", "--tol", "1e-6",
        "--format", "csv",
    ];
    let mut a = args.to_vec();
    a.extend(["--save-config", saved.to_str().unwrap()]);
    let first = run(&a);
    assert!(first.status.success());
    let second = run(&["doubling-scan", "--config", saved.to_str().unwrap()]);
    assert!(second.status.success());
    assert_eq!(first.stdout, second.stdout);
}

/// Every subcommand, run twice with the same configuration and seed, writes
/// byte-identical files.
#[test]
fn runs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cases: Vec<Vec<&str>> = vec![
        vec!["classify", "--theta", "0,5,0", "--n", "2", "--p", "2", "--q", "1.5"],
        vec!["measure", "--theta", "1,-0.5,0.25", "--n", "3", "--fit-scaling"],
        vec!["ap-scan", "--theta", "0.5,0,-0.25", "--n", "2", "--p", "2", "--count", "24", "--seed", "9", "--tol", "1e-6"],
        vec!["doubling-scan", "--preset", "witness-doubling", "--count", "40", "--seed", "5"],
        vec!["ineq", "--theta", "0,2,0", "--n", "2", "--p", "2", "--count", "6", "--seed", "2", "--tol", "1e-5"],
        vec!["solve", "--theta", "0.5,0,0", "--n", "2", "--p", "3", "--h", "0.1", "--phi0", "sine:1"],
        vec!["decay", "--theta", "0.5,0,0", "--n", "2", "--p", "2", "--h", "0.05", "--phi0", "sine:1", "--holder", "0.3", "--pairs", "500", "--seed", "8"],
    ];
    for (i, args) in cases.iter().enumerate() {
        for format in ["json", "csv"] {
            let mut a = args.clone();
            a.extend(["--format", format]);
            let path = dir.path().join(format!("{i}.{format}"));
            let x = run_to(&a, &path);
            let y = run_to(&a, &path);
            assert!(!x.is_empty());
            assert_eq!(x, y, "{a:?}");
        }
    }
}
