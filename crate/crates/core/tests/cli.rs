mod common;

use std::path::Path;
use std::process::{Command, Output};

use sfrrt::sfc::{save_weights, SfcConfig, SfcModel};
use tempfile::TempDir;

fn sfrrt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sfrrt")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn data(rel: &str) -> String {
    common::data_dir().join(rel).to_string_lossy().into_owned()
}

fn s(p: &Path) -> String {
    p.to_string_lossy().into_owned()
}

/// Zero encoder with a constant head logit.
fn constant_model(dir: &Path, logit: f32) -> String {
    let mut m = SfcModel::zeros(SfcConfig::default()).unwrap();
    m.head_fc2.bias[0] = logit;
    let p = dir.join(format!("const_{logit}.sfcw"));
    save_weights(&m, &p).unwrap();
    s(&p)
}

#[test]
fn tiltangle_prints_closed_form_and_oracle() {
    let o = sfrrt(&["tiltangle", "--r-b", "0.025", "--r-u", "0.025", "--h-c", "0.15", "--h-w", "0.075", "--oracle"]);
    assert_eq!(code(&o), 0, "{o:?}");
    let out = stdout(&o);
    // Half-full cylinder: atan(h_c / 2r) = atan(3).
    assert!(out.contains(&format!("{:.4} deg", 3f64.atan().to_degrees())), "{out}");
    assert!(out.contains("oracle"));
    let o = sfrrt(&["tiltangle", "--container", &data("containers/cup.json")]);
    assert_eq!(code(&o), 0);
    let o = sfrrt(&["tiltangle", "--r-b", "0.03", "--r-u", "0.02", "--h-c", "0.1", "--h-w", "0.05"]);
    assert_eq!(code(&o), 2, "narrowing containers are rejected");
}

#[test]
fn bad_usage_exits_two() {
    assert_eq!(code(&sfrrt(&["frobnicate"])), 2);
    assert_eq!(code(&sfrrt(&["plan", "--scene", "x.json"])), 2);
}

#[test]
fn plan_writes_a_trajectory() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("traj.csv");
    let json = dir.path().join("path.json");
    let o = sfrrt(&[
        "plan", "--scene", &data("scenes/open.json"), "--container", &data("containers/cup.json"),
        "--out", &s(&csv), "--path-out", &s(&json), "--iters", "4000", "--seed", "3",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let header = std::fs::read_to_string(&csv).unwrap();
    assert!(header.lines().count() > 10);
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert!(doc["poses"].as_array().unwrap().len() >= 2);

    // The trajectory relabels as spill-free.
    let o = sfrrt(&["label", "--traj", &s(&csv), "--container", &data("containers/cup.json"), "--scene", &data("scenes/open.json")]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert_eq!(v["spilled"], false);
    assert!(v["margin"].as_f64().unwrap() > 0.0);

    let o = sfrrt(&["label", "--traj", &s(&csv), "--container", &data("containers/cup.json"), "--backend", "model"]);
    assert_eq!(code(&o), 2, "model backend needs weights");
    let free = constant_model(dir.path(), 10.0);
    let o = sfrrt(&["label", "--traj", &s(&csv), "--container", &data("containers/cup.json"), "--backend", "model", "--weights", &free]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("\"spilled\":false"));
}

#[test]
fn plan_failure_codes() {
    let dir = TempDir::new().unwrap();
    let out = s(&dir.path().join("t.csv"));
    let gate = data("scenes/tilt_gate.json");
    let cup = data("containers/cup.json");
    let o = sfrrt(&["plan", "--scene", &gate, "--container", &cup, "--out", &out, "--tilt-cap", "15", "--iters", "3000"]);
    assert_eq!(code(&o), 3, "15 degree cap cannot pass the gate");

    let limits = dir.path().join("limits.json");
    std::fs::write(&limits, r#"{"v_max":-1,"a_max":1,"j_max":1,"w_max":1,"alpha_max":1,"zeta_max":1}"#).unwrap();
    let open = data("scenes/open.json");
    let o = sfrrt(&["plan", "--scene", &open, "--container", &cup, "--out", &out, "--limits", &s(&limits)]);
    assert_eq!(code(&o), 2);

    let o = sfrrt(&["plan", "--scene", &open, "--container", &cup, "--out", &out, "--jerk-policy", "sfc"]);
    assert_eq!(code(&o), 2, "sfc policy needs weights");

    let spill = constant_model(dir.path(), -10.0);
    let o = sfrrt(&[
        "plan", "--scene", &open, "--container", &cup, "--out", &out, "--iters", "3000", "--jerk-policy", "sfc", "--weights", &spill,
    ]);
    assert_eq!(code(&o), 4, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(!Path::new(&out).exists());
}

#[test]
fn dataset_and_eval() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.sfcd");
    let b = dir.path().join("b.sfcd");
    for p in [&a, &b] {
        let o = sfrrt(&["dataset", "--n", "8", "--seed", "11", "--out", &s(p)]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    let bytes = std::fs::read(&a).unwrap();
    assert_eq!(bytes, std::fs::read(&b).unwrap(), "seeded generation is reproducible");
    assert_eq!(&bytes[..4], b"SFCD");
    assert_eq!(code(&sfrrt(&["dataset", "--n", "0", "--out", &s(&a)])), 2);

    let free = constant_model(dir.path(), 10.0);
    let o = sfrrt(&["eval", "--weights", &free, "--dataset", &s(&a)]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    assert!(out.contains("records: 8"), "{out}");
    // Balanced data and an always-free model: half right, every spill missed.
    assert!(out.contains("accuracy: 0.5000"), "{out}");
    assert!(out.contains("false-negative rate: 1.0000"), "{out}");

    let empty = dir.path().join("empty.sfcd");
    let mut head = b"SFCD".to_vec();
    head.extend_from_slice(&0u32.to_le_bytes());
    std::fs::write(&empty, head).unwrap();
    assert_eq!(code(&sfrrt(&["eval", "--weights", &free, "--dataset", &s(&empty)])), 2);
    std::fs::write(&empty, b"NOPE\0\0\0\0").unwrap();
    assert_eq!(code(&sfrrt(&["eval", "--weights", &free, "--dataset", &s(&empty)])), 2);
}

#[test]
fn small_experiment_writes_tables() {
    let dir = TempDir::new().unwrap();
    let scenes = dir.path().join("scenes");
    let containers = dir.path().join("containers");
    std::fs::create_dir_all(&scenes).unwrap();
    std::fs::create_dir_all(&containers).unwrap();
    std::fs::copy(data("scenes/open.json"), scenes.join("open.json")).unwrap();
    std::fs::copy(data("containers/tumbler.json"), containers.join("tumbler.json")).unwrap();
    let out = dir.path().join("out");
    let o = sfrrt(&[
        "experiment", "--scenes", &s(&scenes), "--containers", &s(&containers), "--modes", "sfrrt,tiltcap15",
        "--repeats", "2", "--iters", "3000", "--out", &s(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let summary = std::fs::read_to_string(out.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 3, "{summary}");
    assert!(summary.contains("sfrrt") && summary.contains("tiltcap15"));
    let runs = std::fs::read_to_string(out.join("runs.csv")).unwrap();
    assert_eq!(runs.lines().count(), 5);
    assert!(std::fs::read_to_string(out.join("tilt_over_time.csv")).unwrap().starts_with("scene,container,mode,repeat,t,tilt_deg"));
    assert_eq!(code(&sfrrt(&["experiment", "--scenes", &s(&scenes), "--containers", &s(&containers), "--modes", "bogus", "--out", &s(&out)])), 2);
}

#[test]
fn eval_rejects_mismatched_sequence_length() {
    let dir = TempDir::new().unwrap();
    let short = dir.path().join("short.sfcd");
    assert_eq!(code(&sfrrt(&["dataset", "--n", "2", "--seq-len", "20", "--out", &s(&short)])), 0);
    let free = constant_model(dir.path(), 10.0);
    assert_eq!(code(&sfrrt(&["eval", "--weights", &free, "--dataset", &s(&short)])), 2);
}
