//! End-to-end runs of the `mdd` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const NN_MODEL: &str =
    r#"{"model":"NN","informative":{"family":"normal","params":{"mean":0.0,"var":1.0}},"c":100,"sigma2":5}"#;

fn mdd(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mdd"))
        .current_dir(dir)
        .env_remove("MDD_SEED")
        .args(args)
        .output()
        .unwrap()
}

fn ok(out: Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn setup() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("model.json"), NN_MODEL).unwrap();
    fs::write(dir.path().join("data.csv"), "y\n9.1\n10.4\n8.7\n11.2\n10.0\n").unwrap();
    dir
}

#[test]
fn resample_writes_a_deterministic_trace() {
    let dir = setup();
    let args = ["resample", "--model", "model.json", "--data", "data.csv", "--algo", "res1", "--eps", "0.05"];
    let a = ok(mdd(dir.path(), &[&args[..], &["--seed", "4", "--out", "a.jsonl"]].concat()));
    let b = ok(mdd(dir.path(), &[&args[..], &["--seed", "4", "--out", "b.jsonl"]].concat()));
    assert_eq!(a, b);
    let (ta, tb) = (
        fs::read_to_string(dir.path().join("a.jsonl")).unwrap(),
        fs::read_to_string(dir.path().join("b.jsonl")).unwrap(),
    );
    assert_eq!(ta, tb);
    let lines: Vec<serde_json::Value> = ta.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines[0]["record"], "header");
    assert_eq!(lines.last().unwrap()["record"], "summary");
    let summary: serde_json::Value = serde_json::from_str(&a).unwrap();
    let psi = summary["psi"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&psi));
    assert_eq!(summary["m_star"].as_u64().unwrap() as usize, 5 + lines.len() - 2);
}

#[test]
fn environment_seed_overrides_the_config_and_flags_override_both() {
    let dir = setup();
    fs::write(dir.path().join("cfg.json"), r#"{"seed": 1, "algorithm": "res1"}"#).unwrap();
    let run = |env: Option<&str>, flag: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_mdd"));
        cmd.current_dir(dir.path())
            .env_remove("MDD_SEED")
            .args(["resample", "--config", "cfg.json", "--model", "model.json", "--data", "data.csv"]);
        if let Some(s) = env {
            cmd.env("MDD_SEED", s);
        }
        if let Some(s) = flag {
            cmd.args(["--seed", s]);
        }
        let text = ok(cmd.output().unwrap());
        let header: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
        header["config"]["seed"].as_u64().unwrap()
    };
    assert_eq!(run(None, None), 1);
    assert_eq!(run(Some("77"), None), 77);
    assert_eq!(run(Some("77"), Some("5")), 5);
}

#[test]
fn ess_curve_and_summary() {
    let dir = setup();
    let stdout = ok(mdd(dir.path(), &["ess", "--model", "model.json", "--out", "curve.csv"]));
    let summary: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert!((summary["ess"].as_f64().unwrap() - 5.0).abs() < 1e-9);
    assert_eq!(summary["method"], "grid_interpolated");
    let csv = fs::read_to_string(dir.path().join("curve.csv")).unwrap();
    assert!(csv.starts_with("m,delta\n"));
    assert!(dir.path().join("curve.summary.json").exists());
    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("curve.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["experiment"], "ess");
    assert!(meta["version"].as_str().unwrap().starts_with("mdd v"));

    let mix: serde_json::Value =
        serde_json::from_str(&ok(mdd(dir.path(), &["ess", "--model", "model.json", "--mdd-psi", "0.5"]))).unwrap();
    assert!(mix["ess"].as_f64().unwrap() < 5.0);
}

#[test]
fn logistic_ess_table() {
    let dir = setup();
    let args = [
        "logistic-ess", "--variant", "mdd-flat", "--psi", "0.2,0.8", "--sigma2", "1", "--T", "20000", "--seed", "3",
        "--out", "t",
    ];
    ok(mdd(dir.path(), &args));
    let csv = fs::read_to_string(dir.path().join("t.csv")).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("sigma2,psi,ess,ess_mu,ess_beta,se_mu,se_beta"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').take(7).map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[1][2] <= rows[0][2]);
    let meta = fs::read_to_string(dir.path().join("t.meta.json")).unwrap();
    assert!(meta.contains("\"seed\": 3"));
}

#[test]
fn jeffreys_and_mse_outputs() {
    let dir = setup();
    let summary: serde_json::Value =
        serde_json::from_str(&ok(mdd(dir.path(), &["jeffreys-exp", "--m-max", "12", "--out", "j"]))).unwrap();
    assert_eq!(summary["argmin_pi"], 4.0);
    let csv = fs::read_to_string(dir.path().join("j.csv")).unwrap();
    assert_eq!(csv.lines().count(), 13);

    let args = ["mse-sim", "--replications", "3", "--grid", "-6,6", "--seed", "9", "--out", "mse"];
    ok(mdd(dir.path(), &args));
    let first = fs::read(dir.path().join("mse.csv")).unwrap();
    ok(mdd(dir.path(), &args));
    assert_eq!(first, fs::read(dir.path().join("mse.csv")).unwrap());
    let text = String::from_utf8(first).unwrap();
    assert_eq!(text.lines().count(), 1 + 2 * 5);
    assert!(text.lines().skip(1).all(|l| l.ends_with(",9")));
}

#[test]
fn errors_name_the_offending_file() {
    let dir = setup();
    let out = mdd(dir.path(), &["ess", "--model", "missing.json"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.json"));

    fs::write(dir.path().join("bad.json"), r#"{"model":"NN","informative":{"family":"normal","params":{"mean":0,"var":-1}},"c":100,"sigma2":5}"#).unwrap();
    let out = mdd(dir.path(), &["ess", "--model", "bad.json"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad.json"));
}
