use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn netcap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_netcap")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let p = dir.join("cfg.json");
    fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

const CYCLE: &str = r#"{
    "graph": {"kind": "cycle", "n": 3},
    "function": {"kind": "linear", "a": 2.0},
    "x0": [1.0, -0.5, 0.25],
    "horizon": 50,
    "controller": {"kind": "network_flow", "epsilon": 0.001},
    "disturbance": {"w_star": 0.1, "generator": "seeded_uniform", "seed": 9},
    "observation": {"mode": "direct", "d0": 0.01, "seed": 3}
}"#;

#[test]
fn simulate_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CYCLE);
    let out = dir.path().join("run");
    let o = netcap(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let csv = fs::read_to_string(out.join("trajectory.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "t,node,x,u,z,w");
    assert_eq!(lines.len(), 1 + 51 * 3);
    assert!(lines[1].starts_with("0,1,1.0000000000000000e0,"));
    let last = lines.last().unwrap();
    assert!(last.starts_with("50,3,") && last.ends_with(",,,"));
    for line in &lines[1..lines.len() - 3] {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields.len(), 6);
        for v in &fields[2..] {
            let mantissa = v.split('e').next().unwrap().trim_start_matches('-');
            assert_eq!(mantissa.chars().filter(|c| c.is_ascii_digit()).count(), 17, "{v}");
            v.parse::<f64>().unwrap();
        }
    }

    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    let keys: Vec<&str> = summary.as_object().unwrap().keys().map(|k| k.as_str()).collect();
    for k in ["verdict", "steps", "sup_state", "tail_sup", "bound", "certificate"] {
        assert!(keys.contains(&k), "missing {k}");
    }
    assert_eq!(summary["steps"], 50);
    assert!(summary["certificate"].is_null());
    assert!(summary["tail_sup"].as_f64().unwrap() <= summary["sup_state"].as_f64().unwrap());
    assert!(!out.join("certificate.json").exists());
}

#[test]
fn overrides_apply() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CYCLE);
    let run = |seed: &str| {
        let o = netcap(&["simulate", "--config", &cfg, "--horizon", "20", "--seed", seed]);
        assert!(o.status.success());
        serde_json::from_slice::<serde_json::Value>(&o.stdout).unwrap()
    };
    let (a, b, c) = (run("1"), run("1"), run("2"));
    assert_eq!(a["steps"], 20);
    assert_eq!(a["seed"], 1);
    assert_eq!(a, b);
    assert_ne!(a["sup_state"], c["sup_state"]);
}

#[test]
fn adversary_writes_certificate() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{
            "graph": {"kind": "cycle", "n": 3},
            "x0": [0.5, 0.0, -0.5],
            "horizon": 25,
            "controller": {"kind": "local_flow"},
            "disturbance": {"w_star": 0.1, "generator": "zero"}
        }"#,
    );
    let out = dir.path().join("adv");
    let o = netcap(&["adversary", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let cert: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("certificate.json")).unwrap()).unwrap();
    assert_eq!(cert["verdict"], "pass");
    assert_eq!(cert["chi"].as_array().unwrap().len(), 25);
    assert_eq!(cert["E"].as_array().unwrap().len(), 26);
    let summary: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(summary["verdict"], "diverged");
    assert_eq!(summary["certificate"], "certificate.json");

    let o = netcap(&["adversary", "--config", &cfg, "--slope", "2.0"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn capacity_commands() {
    let o = netcap(&["capacity", "--xie-guo"]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("2.914213562"));

    let o = netcap(&["capacity", "--dagger", "--graph", "cycle:5"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let est: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(est["estimate"].as_f64().unwrap() >= 1.0 - 1e-6);
    assert!(est["note"].as_str().unwrap().contains("heuristic"));

    let o = netcap(&["capacity", "--lemma2", "--m", "2.5", "--horizon", "5000"]);
    let run: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(run["verdict"], "summable");
    let o = netcap(&["capacity", "--lemma2", "--m", "4.5", "--mode", "symmetric", "--horizon", "5000"]);
    let run: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(run["verdict"], "diverging");

    assert_eq!(netcap(&["capacity", "--dagger", "--graph", "star:3"]).status.code(), Some(2));
    assert_eq!(netcap(&["capacity", "--lemma2"]).status.code(), Some(2));
    assert_eq!(netcap(&["capacity"]).status.code(), Some(2));
}

#[test]
fn sweep_prints_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &CYCLE.replace("\"horizon\": 50", "\"horizon\": 3000"));
    let out = dir.path().join("sweep");
    let o = netcap(&["sweep", "--config", &cfg, "--L", "0.5:3.5:0.25", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8_lossy(&o.stdout);
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 13);
    assert!(rows[0].contains("stabilized"), "{}", rows[0]);
    assert!(rows[12].contains("diverged"), "{}", rows[12]);
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("sweep.json")).unwrap()).unwrap();
    assert_eq!(report["points"].as_array().unwrap().len(), 13);
}

#[test]
fn validation_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_config(dir.path(), &CYCLE.replace("[1.0, -0.5, 0.25]", "[1.0]"));
    let o = netcap(&["simulate", "--config", &bad]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("x0"));

    let wrong = write_config(dir.path(), &CYCLE.replace("network_flow\", \"epsilon\": 0.001", "path_root\""));
    assert_eq!(netcap(&["simulate", "--config", &wrong]).status.code(), Some(2));
    let garbage = write_config(dir.path(), "{ not json");
    assert_eq!(netcap(&["simulate", "--config", &garbage]).status.code(), Some(2));
    assert_eq!(netcap(&["sweep", "--config", &garbage, "--L", "1:2"]).status.code(), Some(2));
    assert_eq!(netcap(&["bogus"]).status.code(), Some(2));
}
