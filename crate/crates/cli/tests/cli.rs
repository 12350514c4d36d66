use std::process::{Command, Output};

use qrobust_core::circuit::build_qft;
use qrobust_core::circuit::qasm::parse_circuit;
use qrobust_core::cohbound::{bound_gamma, gamma_norm, gamma_opt};
use qrobust_core::errmodel::{model_pauli, Pauli};
use qrobust_core::optkit::OptSettings;
use serde_json::Value;

fn qrobust(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qrobust"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn f(v: &Value) -> f64 {
    v.as_f64().unwrap_or_else(|| panic!("not a number: {v}"))
}

#[test]
fn bound_matches_library_calls() {
    let out = qrobust(&[
        "bound",
        "--circuit",
        "qft3",
        "--model",
        "pauli-z",
        "--delta",
        "1e-3",
        "--gamma-method",
        "opt,norm",
        "--starts",
        "20",
    ]);
    let doc = stdout_json(&out);
    assert_eq!(doc["schema"], "qrobust.bound/1");
    assert_eq!(doc["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(doc["seed"], 0);
    assert_eq!(doc["config_sha256"].as_str().unwrap().len(), 64);

    let circuit = build_qft(3).unwrap();
    let model = model_pauli(&circuit, Pauli::Z, 1e-3).unwrap();
    let settings = OptSettings {
        starts: 20,
        ..OptSettings::default()
    };
    let opt = gamma_opt(&circuit, &model, &settings).unwrap().value;
    let norm = gamma_norm(&circuit, &model).unwrap().value;
    let gammas = doc["result"]["gamma"].as_array().unwrap();
    assert_eq!(gammas.len(), 2);
    for (entry, (method, expected)) in gammas.iter().zip([("opt", opt), ("norm", norm)]) {
        assert_eq!(entry["gamma"]["method"], method);
        assert!((f(&entry["gamma"]["value"]) - expected).abs() < 1e-12);
        let bound = bound_gamma(1e-3, circuit.len(), expected).unwrap().value;
        assert!((f(&entry["bound"]["value"]) - bound).abs() < 1e-12);
    }
    assert!(doc["result"]["direct"]["value"].is_number());
}

#[test]
fn zero_error_gives_unit_bounds() {
    let out = qrobust(&[
        "bound",
        "--circuit",
        "qft2",
        "--model",
        "cce",
        "--delta",
        "0",
        "--gamma-method",
        "opt,vertex,norm",
        "--starts",
        "4",
    ]);
    let doc = stdout_json(&out);
    let r = &doc["result"];
    assert_eq!(f(&r["direct"]["value"]), 1.0);
    assert_eq!(f(&r["prior"]["value"]), 1.0);
    for g in r["gamma"].as_array().unwrap() {
        assert_eq!(f(&g["bound"]["value"]), 1.0);
    }
}

#[test]
fn missing_circuit_file_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("absent.qc");
    let out = qrobust(&[
        "bound",
        "--circuit",
        missing.to_str().unwrap(),
        "--model",
        "cce",
        "--delta",
        "0.1",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("absent.qc"));
}

#[test]
fn config_errors_name_file_and_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.json");
    std::fs::write(&path, "{\n  \"seed\": 1,\n  \"nonsense\": true\n}\n").unwrap();
    let out = qrobust(&["--config", path.to_str().unwrap(), "gamma"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("run.json:3"), "{err}");
}

#[test]
fn circuit_parse_errors_exit_2_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.qc");
    std::fs::write(&path, "qubits 1;\nh 0;\nfoo 0;\n").unwrap();
    let out = qrobust(&["gamma", "--circuit", path.to_str().unwrap(), "--model", "pauli-x"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("bad.qc") && err.contains("line 3"), "{err}");
}

#[test]
fn seeded_sweep_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let path = dir.path().join(name);
        let out = qrobust(&[
            "--seed",
            "7",
            "--out",
            path.to_str().unwrap(),
            "sweep",
            "--circuit",
            "qft2",
            "--model",
            "pauli-x",
            "--deltas",
            "0.01,0.1",
            "--samples",
            "500",
            "--starts",
            "8",
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        std::fs::read(path).unwrap()
    };
    let a = run("a.csv");
    assert_eq!(a, run("b.csv"));
    let text = String::from_utf8(a).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# schema=qrobust.sweep/1 version="));
    assert!(lines.next().unwrap().starts_with("delta,bound_direct,"));
    assert_eq!(lines.count(), 2);
}

#[test]
fn scaling_curves_cover_four_gammas() {
    let out = qrobust(&["sweep", "--scaling"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = text.lines().skip(2).collect();
    assert_eq!(rows.len(), 4 * 41);
    for gamma in ["0", "0.01", "0.1", "1"] {
        assert!(rows.iter().any(|r| r.split(',').nth(1) == Some(gamma)));
    }
}

#[test]
fn design_writes_five_pulse_circuit() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("design.json");
    let out = qrobust(&["--out", report.to_str().unwrap(), "design", "--starts", "2"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("design.qc")).unwrap();
    let circuit = parse_circuit(&text).unwrap();
    assert_eq!(circuit.len(), 5);
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    let after = &doc["result"]["report"]["after"];
    let before = &doc["result"]["report"]["before"];
    assert!(f(&after["objective"]) >= f(&before["objective"]));
    assert!(after["constraints"]
        .as_array()
        .unwrap()
        .iter()
        .all(|c| c["satisfied"] == true));
}

#[test]
fn channel_reports_bounds_and_fmin() {
    let out = qrobust(&[
        "channel",
        "--circuit",
        "jones",
        "--delta",
        "0.01",
        "--fmin-samples",
        "100",
        "--starts",
        "8",
    ]);
    let doc = stdout_json(&out);
    let r = &doc["result"];
    let fmin = f(&r["fmin"]["value"]);
    for g in r["gammas"].as_array().unwrap() {
        assert!(f(&g["worst_case"]["value"]) <= fmin + 1e-12);
    }
    assert!(f(&r["instance_unitary"]["value"]) >= f(&r["instance"]["value"]));
}

#[test]
fn config_file_drives_a_run() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.qc"), "qubits 1;\nrx(0.7) 0;\nrz(0.3) 0;\n").unwrap();
    let config = dir.path().join("run.json");
    std::fs::write(
        &config,
        r#"{
  "seed": 3,
  "circuit": { "file": "c.qc" },
  "model": { "kind": "pauli-y", "delta": 0.02 },
  "analysis": { "gamma_methods": ["vertex"], "samples": 200 }
}"#,
    )
    .unwrap();
    let out = qrobust(&["--config", config.to_str().unwrap(), "sample"]);
    let doc = stdout_json(&out);
    assert_eq!(doc["seed"], 3);
    assert_eq!(doc["result"]["stats"]["n_samples"], 200);
    // Flags override the config.
    let out = qrobust(&[
        "--config",
        config.to_str().unwrap(),
        "--seed",
        "4",
        "sample",
        "--samples",
        "10",
    ]);
    let doc = stdout_json(&out);
    assert_eq!(doc["seed"], 4);
    assert_eq!(doc["result"]["stats"]["n_samples"], 10);
}

#[test]
fn format_flag_switches_to_csv() {
    let out = qrobust(&[
        "--format",
        "csv",
        "gamma",
        "--circuit",
        "rx:0.785398",
        "--model",
        "cce",
        "--gamma-method",
        "vertex",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("# schema=qrobust.gamma/1"));
    assert_eq!(lines[1], "method,gamma,certified");
    let gamma: f64 = lines[2].split(',').nth(1).unwrap().parse().unwrap();
    assert!((gamma - 1.0).abs() < 1e-9);
}
