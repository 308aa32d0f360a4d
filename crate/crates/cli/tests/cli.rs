use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn qdc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qdc")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, json: &str) -> String {
    let path = dir.join("config.json");
    fs::write(&path, json).unwrap();
    path.to_string_lossy().into_owned()
}

const SMALL: &str = r#"{
  "circuit": {"benchmark": "qaoa", "qubits": 12},
  "partition": {"method": "kl", "qpus": 4},
  "trials": 4,
  "seed": 3
}"#;

#[test]
fn simulate_writes_outputs_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = qdc(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap(), "--emit-events"]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        assert!(String::from_utf8_lossy(&o.stdout).contains("dynamic/static ratio"));
    }
    // config.json echoes the output directory, so only its presence is checked.
    assert!(a.join("config.json").exists());
    for f in ["delay_stats.csv", "demand.csv", "bsm_profile.csv", "events.jsonl"] {
        let x = fs::read_to_string(a.join(f)).unwrap();
        assert!(!x.is_empty(), "{f}");
        assert!(x == fs::read_to_string(b.join(f)).unwrap(), "{f} differs");
    }
    let stats = fs::read_to_string(a.join("delay_stats.csv")).unwrap();
    assert!(stats.starts_with("config,trials,mean_ns"));
    assert_eq!(stats.lines().count(), 3);
}

#[test]
fn zero_probability_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"physical": {"cross": {"attempt_time": "10ms", "success_prob": 0}}}"#);
    let o = qdc(&["simulate", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("success probability"));
}

#[test]
fn missing_config_file_is_a_runtime_error() {
    let o = qdc(&["simulate", "--config", "/nonexistent/qdc.json"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn generate_and_partition() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"circuit": {"benchmark": "bv", "qubits": 20}, "partition": {"method": "opt_wbcp", "qpus": 2, "packing": true}}"#,
    );
    let out = dir.path().to_str().unwrap();
    assert!(qdc(&["generate", "--config", &cfg, "--out", out]).status.success());
    let qasm = fs::read_to_string(dir.path().join("circuit.qasm")).unwrap();
    assert!(qasm.contains("qreg q[20];"));
    let o = qdc(&["partition", "--config", &cfg, "--out", out]);
    assert!(o.status.success());
    let cost = fs::read_to_string(dir.path().join("cost.csv")).unwrap();
    assert!(cost.starts_with("method,qpus,nonlocal_gates"));
    let json: String = fs::read_to_string(dir.path().join("partition.json")).unwrap();
    assert!(json.contains("\"teleports\""));
}

#[test]
fn qasm_input_round_trips_through_the_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let qasm = dir.path().join("c.qasm");
    fs::write(&qasm, "OPENQASM 2.0;\ninclude \"qelib1.inc\";\nqreg q[4];\nh q[0];\ncx q[0],q[2];\ncx q[1],q[3];\n")
        .unwrap();
    let json = format!(
        r#"{{"circuit": {{"qasm": "{}"}}, "partition": {{"method": "kl", "qpus": 2}}, "trials": 2}}"#,
        qasm.display()
    );
    let cfg = write_config(dir.path(), &json);
    let o = qdc(&["simulate", "--config", &cfg, "--out", dir.path().join("o").to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn profile_and_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{
          "circuit": {"benchmark": "qaoa", "qubits": 10},
          "partition": {"method": "kl", "qpus": 4},
          "trials": 3,
          "sweep": {"cross_success_prob": [0.5, 1.0]}
        }"#,
    );
    let out = dir.path().join("p");
    let o = qdc(&["profile", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(fs::read_to_string(out.join("peak_bsm.csv")).unwrap().starts_with("switch,peak_bsm"));

    let out = dir.path().join("s");
    let o = qdc(&["sweep", "--config", &cfg, "--out", out.to_str().unwrap(), "--seed", "9"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let paired = fs::read_to_string(out.join("paired.csv")).unwrap();
    assert_eq!(paired.lines().count(), 3);
    let sweep = fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert_eq!(sweep.lines().count(), 5);
}
