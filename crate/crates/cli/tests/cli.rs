use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

const BIN: &str = env!("CARGO_BIN_EXE_tabver");

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/data").join(name)
}

fn tabver(args: &[&str]) -> Output {
    Command::new(BIN).args(args).env_remove("TABVER_DATA_DIR").output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout_json(o: &Output) -> serde_json::Value {
    let s = String::from_utf8_lossy(&o.stdout);
    // the summary object is printed last
    let start = s.rfind("\n{\n").map_or(0, |i| i + 1);
    serde_json::from_str(&s[start..]).unwrap()
}

fn stderr_json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stderr).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn demo_accepts_and_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let o = tabver(&["demo", "--out", s(dir.path())]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let j = stdout_json(&o);
    assert_eq!(j["accept"], true);
    assert_eq!(j["audit"], 1);
    assert_eq!(j["coverage_matches_fired_tables"], true);
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("worked-example claim: Y=(True, ⊥, ⊥, 2, ⊥)"));
    let a = tabver(&["audit", "--cert", s(&dir.path().join("certificate.json"))]);
    assert_eq!(code(&a), 0);
}

#[test]
fn verify_then_audit_in_process() {
    let dir = tempfile::tempdir().unwrap();
    let cert = dir.path().join("c.json");
    let report = dir.path().join("coverage.json");
    for mode in ["honest", "general"] {
        let o = tabver(&[
            "verify", "--graph", s(&data("demo.tbl")), "--spec", s(&data("demo_spec.tbl")),
            "--mode", mode, "--budget", "8", "--seed", "4", "--cert", s(&cert), "--out", s(&report),
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        assert!(String::from_utf8_lossy(&o.stdout).starts_with("table  coverage\nPT1"));
        assert_eq!(code(&tabver(&["audit", "--cert", s(&cert)])), 0);
        let cov: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
        assert_eq!(cov["tables"].as_object().unwrap().len(), 8);
    }
}

#[test]
fn verify_is_reproducible_from_seeds() {
    let dir = tempfile::tempdir().unwrap();
    let certs: Vec<String> = (0..2)
        .map(|i| {
            let cert = dir.path().join(format!("c{i}.json"));
            let o = tabver(&[
                "verify", "--graph", s(&data("chain.tbl")), "--spec", s(&data("chain.tbl")),
                "--mode", "general", "--seed", "9", "--dev-seed", "2", "--cert", s(&cert),
            ]);
            assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
            std::fs::read_to_string(cert).unwrap()
        })
        .collect();
    assert_eq!(certs[0], certs[1]);
}

#[test]
fn mutated_implementation_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let src = std::fs::read_to_string(data("demo.tbl")).unwrap().replace("(b, 2)", "(b, 4)");
    let graph = dir.path().join("mutant.tbl");
    std::fs::write(&graph, src).unwrap();
    let cert = dir.path().join("c.json");
    let o = tabver(&[
        "verify", "--graph", s(&graph), "--spec", s(&data("demo_spec.tbl")), "--cert", s(&cert),
    ]);
    assert_eq!(code(&o), 1);
    assert_eq!(stdout_json(&o)["accept"], false);
    // a rejecting certificate is still a faithful record
    assert_eq!(code(&tabver(&["audit", "--cert", s(&cert)])), 0);
}

#[test]
fn tampered_certificate_fails_audit() {
    let dir = tempfile::tempdir().unwrap();
    let cert = dir.path().join("c.json");
    let o = tabver(&["verify", "--graph", s(&data("demo.tbl")), "--spec", s(&data("demo_spec.tbl")), "--cert", s(&cert)]);
    assert_eq!(code(&o), 0);
    let text = std::fs::read_to_string(&cert).unwrap();
    let tampered = text.replacen("\"accept\": true", "\"accept\": false", 1);
    assert_ne!(tampered, text);
    std::fs::write(&cert, tampered).unwrap();
    let a = tabver(&["audit", "--cert", s(&cert)]);
    assert_eq!(code(&a), 1);
    assert_eq!(stdout_json(&a)["result"], 0);
}

#[test]
fn serve_and_connect_over_tcp() {
    let dir = tempfile::tempdir().unwrap();
    let params = dir.path().join("params.json");
    let graph = data("diamond.tbl");
    let e = tabver(&["encrypt", "--graph", s(&graph), "--seed", "5", "--out", s(&params)]);
    assert_eq!(code(&e), 0);
    let mut server = Command::new(BIN)
        .args(["serve", "--graph", s(&graph), "--seed", "5", "--listen", "127.0.0.1:0", "--connections", "2", "--concurrent"])
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(server.stdout.take().unwrap()).read_line(&mut line).unwrap();
    let addr = line.trim().strip_prefix("listening on ").unwrap().to_string();
    for mode in ["honest", "general"] {
        let cert = dir.path().join(format!("{mode}.json"));
        let o = tabver(&[
            "verify", "--connect", &addr, "--params", s(&params), "--spec", s(&graph),
            "--mode", mode, "--cert", s(&cert),
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        assert_eq!(code(&tabver(&["audit", "--cert", s(&cert)])), 0);
    }
    assert!(server.wait().unwrap().success());
}

#[test]
fn data_dir_resolves_relative_paths() {
    let o = Command::new(BIN)
        .args(["compile", "--graph", "chain.tbl"])
        .env("TABVER_DATA_DIR", data(""))
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert_eq!(stdout_json(&o)["transformed_tables"], 4);
}

#[test]
fn compile_reports_property_violations() {
    let dir = tempfile::tempdir().unwrap();
    let graph = dir.path().join("gap.tbl");
    std::fs::write(
        &graph,
        "input a: int[0..10]\noutput y\ntable T {\n  inputs: a: int\n  outputs: y: int\n  rows: [\n    (a > 5, 1),\n    (a < 3, 2),\n  ]\n}\nedges:\n  Input.a -> T.a\n  T.y -> Output.y\n",
    )
    .unwrap();
    let o = tabver(&["compile", "--graph", s(&graph)]);
    assert_eq!(code(&o), 1);
    assert_eq!(stdout_json(&o)["properties"][0]["incomplete_count"], 3);
}

#[test]
fn keygen_and_sim_equiv() {
    let dir = tempfile::tempdir().unwrap();
    let o = tabver(&["keygen", "--backend", "integer-she", "--out", s(dir.path())]);
    assert_eq!(code(&o), 0);
    assert!(std::fs::metadata(dir.path().join("hsk.bin")).unwrap().len() > 600);
    let o = tabver(&["sim-equiv", "--count", "10"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout_json(&o)["differing"].as_array().unwrap().len(), 0);
}

#[test]
fn usage_and_abort_exit_codes() {
    let o = tabver(&["verify", "--spec", s(&data("demo_spec.tbl"))]);
    assert_eq!(code(&o), 2);
    assert_eq!(stderr_json(&o)["error"], "usage");
    let o = tabver(&["verify", "--spec", s(&data("demo_spec.tbl")), "--cert", "/tmp/x.json"]);
    assert_eq!(code(&o), 2);
    let o = tabver(&["audit", "--cert", "/nonexistent/cert.json"]);
    assert_eq!(code(&o), 2);
    assert!(stderr_json(&o)["message"].as_str().unwrap().contains("cert.json"));
    // the demo U is far deeper than the integer backend's budget
    let o = tabver(&["demo", "--backend", "integer-she"]);
    assert_eq!(code(&o), 3);
    assert_eq!(stderr_json(&o)["error"], "abort");
    // nothing listening
    let dir = tempfile::tempdir().unwrap();
    let params = dir.path().join("p.json");
    assert_eq!(code(&tabver(&["encrypt", "--graph", s(&data("chain.tbl")), "--out", s(&params)])), 0);
    let o = tabver(&[
        "verify", "--connect", "127.0.0.1:1", "--params", s(&params), "--spec", s(&data("chain.tbl")),
        "--cert", s(&dir.path().join("c.json")),
    ]);
    assert_eq!(code(&o), 3);
}
