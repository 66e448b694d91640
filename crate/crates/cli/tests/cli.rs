use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const DIAMOND: &str = r#"{
  "variables": [
    {"name": "X1", "states": ["0", "1"]},
    {"name": "X2", "states": ["0", "1"]},
    {"name": "X3", "states": ["0", "1"]},
    {"name": "X4", "states": ["0", "1"]}
  ],
  "arcs": [["X1", "X2"], ["X1", "X3"], ["X2", "X4"], ["X3", "X4"]],
  "cpt": {
    "X1": [[0.6, 0.4]],
    "X2": [[0.5, 0.5], [0.5, 0.5]],
    "X3": [[0.5, 0.5], [0.5, 0.5]],
    "X4": [[0.5, 0.5], [0.5, 0.5], [0.5, 0.5], [0.5, 0.5]]
  }
}"#;

fn bneb(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bneb"))
        .args(args)
        .env_remove("BNEB_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_str(&stdout(out)).unwrap()
}

fn diamond_file(dir: &Path, with_cpt: bool) -> PathBuf {
    let path = dir.join(if with_cpt {
        "diamond.json"
    } else {
        "bare.json"
    });
    let text = if with_cpt {
        DIAMOND.to_string()
    } else {
        let mut v: Value = serde_json::from_str(DIAMOND).unwrap();
        v.as_object_mut().unwrap().remove("cpt");
        v.to_string()
    };
    fs::write(&path, text).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn query_flat_prior_is_uniform() {
    let dir = tempfile::tempdir().unwrap();
    let net = diamond_file(dir.path(), false);
    let out = bneb(&[
        "query",
        "--network",
        s(&net),
        "--target",
        "X1=1",
        "--format",
        "json",
    ]);
    let v = json(&out);
    assert_eq!(v["mean"].as_f64().unwrap(), 0.5);
    assert!((v["variance"].as_f64().unwrap() - 1.0 / 12.0).abs() < 1e-15);
    assert_eq!(v["intervals"].as_array().unwrap().len(), 4);
    assert_eq!(v["contributions"].as_array().unwrap().len(), 9);
}

#[test]
fn query_json_recomputes_intervals() {
    let dir = tempfile::tempdir().unwrap();
    let net = diamond_file(dir.path(), false);
    let out = bneb(&[
        "query",
        "--network",
        s(&net),
        "--target",
        "X1=1",
        "--evidence",
        "X4=1",
        "--format",
        "json",
    ]);
    let v = json(&out);
    let (mean, std) = (v["mean"].as_f64().unwrap(), v["std"].as_f64().unwrap());
    for ci in v["intervals"].as_array().unwrap() {
        let z = ci["z"].as_f64().unwrap();
        assert!((ci["lower"].as_f64().unwrap() - (mean - z * std)).abs() < 1e-15);
        assert!((ci["upper"].as_f64().unwrap() - (mean + z * std)).abs() < 1e-15);
    }
}

#[test]
fn query_text_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let net = diamond_file(dir.path(), false);
    let text = stdout(&bneb(&["query", "--network", s(&net), "--target", "X1=1"]));
    assert!(text.contains("Pr{X1=1}"));
    assert!(text.contains("0.0833333"));
    assert!(text.contains("0.288675"));
    let csv = stdout(&bneb(&[
        "query",
        "--network",
        s(&net),
        "--target",
        "X1=1",
        "--delta",
        "0.10,0.20,0.30,0.40",
        "--format",
        "csv",
    ]));
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 5);
    assert!(lines[0].starts_with("delta,z,lower,upper"));
}

#[test]
fn query_with_data_and_prior() {
    let dir = tempfile::tempdir().unwrap();
    let net = diamond_file(dir.path(), false);
    let data = dir.path().join("data.csv");
    fs::write(&data, "X4,X3,X2,X1\n0,0,0,1\n1,1,1,1\n0,1,0,0\n").unwrap();
    let prior = dir.path().join("prior.json");
    fs::write(
        &prior,
        r#"{"pseudocounts":{"X1":[[2,2]],"X2":[[1,1],[1,1]],"X3":[[1,1],[1,1]],
           "X4":[[1,1],[1,1],[1,1],[1,1]]}}"#,
    )
    .unwrap();
    let v = json(&bneb(&[
        "query",
        "--network",
        s(&net),
        "--data",
        s(&data),
        "--prior",
        s(&prior),
        "--target",
        "X1=1",
        "--format",
        "json",
    ]));
    // Beta(2 + 2, 2 + 1)
    let (a, b) = (4.0, 3.0);
    assert!((v["mean"].as_f64().unwrap() - a / (a + b)).abs() < 1e-15);
    let var = a * b / ((a + b) * (a + b) * (a + b + 1.0));
    assert!((v["variance"].as_f64().unwrap() - var).abs() < 1e-15);
    assert_eq!(v["records"].as_u64().unwrap(), 3);
}

#[test]
fn errors_map_to_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let net = diamond_file(dir.path(), false);
    let out = bneb(&["query", "--network", s(&net), "--target", "X9=1"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert_eq!(err.lines().count(), 1);
    assert!(err.contains("X9"));

    let out = bneb(&[
        "query",
        "--network",
        s(&net),
        "--target",
        "X1=1",
        "--delta",
        "1.5",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{").unwrap();
    assert_eq!(
        bneb(&["query", "--network", s(&bad), "--target", "X1=1"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(bneb(&["query", "--target", "X1=1"]).status.code(), Some(1));
    assert_eq!(bneb(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(bneb(&["--help"]).status.code(), Some(0));
}

#[test]
fn validate_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let net = diamond_file(dir.path(), false);
    let qq = dir.path().join("qq.csv");
    let args = [
        "validate",
        "--network",
        s(&net),
        "--target",
        "X4=1",
        "--evidence",
        "X1=1",
        "--replicates",
        "100",
        "--seed",
        "42",
        "--qq-out",
        s(&qq),
    ];
    let a = stdout(&bneb(&args));
    let first_qq = fs::read(&qq).unwrap();
    let mut one_thread = vec!["--threads", "1"];
    one_thread.extend(args);
    let b = stdout(&bneb(&one_thread));
    assert_eq!(a, b);
    assert_eq!(fs::read(&qq).unwrap(), first_qq);
    assert_eq!(String::from_utf8(first_qq).unwrap().lines().count(), 101);
    assert!(a.contains("qq correlation"));

    let env = Command::new(env!("CARGO_BIN_EXE_bneb"))
        .args(&args[..args.len() - 4])
        .arg("--qq-out")
        .arg(&qq)
        .env("BNEB_SEED", "42")
        .output()
        .unwrap();
    assert_eq!(stdout(&env), a);
}

#[test]
fn validate_uniform_coverage() {
    let dir = tempfile::tempdir().unwrap();
    let net = diamond_file(dir.path(), false);
    let v = json(&bneb(&[
        "validate",
        "--network",
        s(&net),
        "--target",
        "X1=1",
        "--replicates",
        "100000",
        "--seed",
        "7",
        "--delta",
        "0.1",
        "--format",
        "json",
    ]));
    let hat = v["coverage"][0]["delta_hat"].as_f64().unwrap();
    assert!((hat - 0.0502).abs() <= 0.004, "{hat}");
}

#[test]
fn simulate_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let net = diamond_file(dir.path(), true);
    let empty = dir.path().join("empty.csv");
    stdout(&bneb(&[
        "simulate",
        "--network",
        s(&net),
        "--records",
        "0",
        "--out",
        s(&empty),
    ]));
    assert_eq!(fs::read_to_string(&empty).unwrap(), "X1,X2,X3,X4\n");

    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        stdout(&bneb(&[
            "simulate",
            "--network",
            s(&net),
            "-m",
            "100000",
            "--seed",
            "3",
            "--out",
            s(p),
        ]));
    }
    let bytes = fs::read(&a).unwrap();
    assert_eq!(bytes, fs::read(&b).unwrap());
    let text = String::from_utf8(bytes).unwrap();
    let ones = text.lines().skip(1).filter(|l| l.starts_with('1')).count();
    let freq = ones as f64 / 100_000.0;
    assert!((freq - 0.4).abs() < 0.005, "{freq}");

    let bare = diamond_file(dir.path(), false);
    let out = bneb(&["simulate", "--network", s(&bare), "-m", "5"]);
    assert_eq!(out.status.code(), Some(2));
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path
}

#[test]
fn experiment_diamond_reduced() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "diamond.json",
        r#"{"structure":{"kind":"diamond"},"sample_sizes":[10,20,30,40],"trials":3,
            "replicates":50,"queries":{"kind":"diamond"},"seed":5}"#,
    );
    let out_dir = dir.path().join("out");
    let text = stdout(&bneb(&[
        "experiment",
        "diamond",
        "--config",
        s(&config),
        "--out-dir",
        s(&out_dir),
    ]));
    for d in ["0.1", "0.2", "0.3", "0.4"] {
        assert!(text.contains(&format!("delta = {d}\n")));
    }
    assert!(text.contains("Q1") && text.contains("Q6"));
    let csv = fs::read_to_string(out_dir.join("grid.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 4 * 4 * 6);
    assert!(!fs::read_to_string(out_dir.join("grid.txt"))
        .unwrap()
        .is_empty());
    let manifest: Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 5);
    assert_eq!(manifest["config_hash"].as_str().unwrap().len(), 64);
    assert_eq!(manifest["skipped"]["zero_evidence_queries"], 0);

    let again = dir.path().join("again");
    let other = stdout(&bneb(&[
        "--threads",
        "2",
        "experiment",
        "diamond",
        "--config",
        s(&config),
        "--out-dir",
        s(&again),
    ]));
    assert_eq!(text, other);
    assert_eq!(csv, fs::read_to_string(again.join("grid.csv")).unwrap());
}

#[test]
fn experiment_random_reduced() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "random.json",
        r#"{"structure":{"kind":"random","n":10,"links":20},"sample_sizes":[100],"trials":2,
            "replicates":30,"queries":{"kind":"random","num_h":[1,2,3,4,5],"num_e":[1,2,3,4,5],
            "per_network":1},"seed":9}"#,
    );
    let out_dir = dir.path().join("out");
    let text = stdout(&bneb(&[
        "experiment",
        "random",
        "--config",
        s(&config),
        "--out-dir",
        s(&out_dir),
    ]));
    assert_eq!(text.matches("delta = ").count(), 4);
    let csv = fs::read_to_string(out_dir.join("grid.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "delta,m,#H,#E,score,k");
    assert_eq!(csv.lines().count(), 1 + 4 * 25);
}

#[test]
fn experiment_file_kind() {
    let dir = tempfile::tempdir().unwrap();
    diamond_file(dir.path(), true);
    let config = write_config(
        dir.path(),
        "file.json",
        r#"{"structure":{"kind":"file","path":"diamond.json"},"sample_sizes":[50],"trials":2,
            "replicates":20,"deltas":[0.2],"queries":{"kind":"fixed","queries":[
            {"target":"X1=1","evidence":"X4=0"}]}}"#,
    );
    let out_dir = dir.path().join("out");
    let v = json(&bneb(&[
        "experiment",
        "file",
        "--config",
        s(&config),
        "--out-dir",
        s(&out_dir),
        "--format",
        "json",
    ]));
    assert_eq!(v["cells"].as_array().unwrap().len(), 1);
    assert_eq!(v["cells"][0]["k"], 2);
    let out = bneb(&["experiment", "file", "--out-dir", s(&out_dir)]);
    assert_eq!(out.status.code(), Some(2));
    let bad = write_config(
        dir.path(),
        "bad.json",
        r#"{"structure":{"kind":"diamond"},"sample_sizes":[],
        "trials":1,"queries":{"kind":"diamond"}}"#,
    );
    let out = bneb(&[
        "experiment",
        "diamond",
        "--config",
        s(&bad),
        "--out-dir",
        s(&out_dir),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn gold_standard_table() {
    let v = json(&bneb(&["gold-standard", "--format", "json"]));
    let rows = v.as_array().unwrap();
    assert_eq!(rows.len(), 4);
    let expected = [(2.38, 1.86), (3.15, 2.41), (3.63, 2.79), (3.88, 2.96)];
    for (row, (m, sd)) in rows.iter().zip(expected) {
        assert!((row["mean"].as_f64().unwrap() - m).abs() <= 0.05);
        assert!((row["std"].as_f64().unwrap() - sd).abs() <= 0.05);
    }
    let text = stdout(&bneb(&[
        "gold-standard",
        "--delta",
        "0.3",
        "--replicates",
        "1",
    ]));
    // 100 · E|B − 0.3| with B ~ Bernoulli(0.3) = 100 · 2 · 0.3 · 0.7
    assert!(text.lines().nth(1).unwrap().contains("42"));
    assert_eq!(
        bneb(&["gold-standard", "--delta", "1.5"]).status.code(),
        Some(2)
    );
}
