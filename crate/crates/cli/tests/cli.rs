use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn rbmortar(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rbmortar"))
        .args(args)
        .current_dir(cwd)
        .env("RBMORTAR_THREADS", "1")
        .output()
        .unwrap()
}

fn stdout_json(out: &Output) -> serde_json::Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

const CONFIG: &str = r#"{
  "geometry": "slab2",
  "varied": ["e_y", "g_xy", "thickness"],
  "k": 2,
  "training_size": 12,
  "n_init": 4,
  "n_max": 10,
  "seed": 3,
  "output": "model"
}"#;

const MU: &str = r#"{
  "e_x": 14000, "e_y": 2280, "e_z": 1160, "g_yz": 465, "g_zx": 1080, "g_xy": 1610,
  "nu_yz": 0.36, "nu_zx": 0.0429, "nu_xy": 0.448, "thickness": 1.2
}"#;

#[test]
fn offline_online_validate_round() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    fs::write(root.join("study.json"), CONFIG).unwrap();
    fs::write(root.join("mu.json"), MU).unwrap();

    let summary = stdout_json(&rbmortar(&["offline", "--config", "study.json"], root));
    assert_eq!(summary["n"], 10);
    assert!(root.join("model/greedy_history.csv").exists());

    let online = stdout_json(&rbmortar(&["online", "--model", "model", "--mu", "mu.json"], root));
    let q = &online["queries"][0];
    assert_eq!(q["eigenvalues"].as_array().unwrap().len(), 2);
    assert_eq!(q["in_box"], true);
    assert!(online["seconds"].as_f64().unwrap() >= 0.0);
    assert!(q.get("eigenvectors").is_none());

    let heavy = stdout_json(&rbmortar(&["online", "--model", "model", "--mu", "mu.json", "--rho", "1440", "--eigenvectors"], root));
    let l0 = q["eigenvalues"][0].as_f64().unwrap();
    let h0 = heavy["queries"][0]["eigenvalues"][0].as_f64().unwrap();
    assert!((h0 - l0 / 2.0).abs() <= 1e-12 * l0);
    assert_eq!(heavy["queries"][0]["eigenvectors"].as_array().unwrap().len(), 2);

    let val = stdout_json(&rbmortar(&["validate", "--model", "model", "--samples", "3", "--seed", "1", "--sizes", "4,10"], root));
    assert_eq!(val["rows"].as_array().unwrap().len(), 4);
    let csv = fs::read_to_string(root.join(val["csv"].as_str().unwrap())).unwrap();
    assert!(csv.starts_with("n,index,mean_rel,mean_abs,mean_eigfun,max_rel,max_eigfun"));

    fs::write(root.join("bad.json"), MU.replace("0.448", "3.0")).unwrap();
    let bad = rbmortar(&["online", "--model", "model", "--mu", "bad.json"], root);
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("inadmissible"));
}

#[test]
fn exit_codes_for_errors() {
    let dir = tempfile::tempdir().unwrap();
    let missing = rbmortar(&["online", "--model", "nowhere", "--mu", "nothing.json"], dir.path());
    assert_eq!(missing.status.code(), Some(1));
    let usage = rbmortar(&["offline"], dir.path());
    assert_eq!(usage.status.code(), Some(2));
    let threads = Command::new(env!("CARGO_BIN_EXE_rbmortar"))
        .args(["geometry", "unit_cube", "--output", "g.json"])
        .current_dir(dir.path())
        .env("RBMORTAR_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(threads.status.code(), Some(2));
}

#[test]
fn geometry_dump_is_loadable() {
    let dir = tempfile::tempdir().unwrap();
    let out = rbmortar(&["geometry", "bracket3", "--output", "b.json"], dir.path());
    assert!(out.status.success());
    let g: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("b.json")).unwrap()).unwrap();
    assert_eq!(g["patches"].as_array().unwrap().len(), 3);

    fs::write(dir.path().join("c.json"), r#"{"geometry": {"file": "b.json"}, "k": 1, "training_size": 2, "n_init": 1, "n_max": 2, "output": "m", "varied": ["thickness"]}"#).unwrap();
    let summary = stdout_json(&rbmortar(&["offline", "--config", "c.json"], dir.path()));
    assert_eq!(summary["n"], 2);
}
