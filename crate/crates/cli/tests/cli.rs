use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn advchan(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_advchan"))
        .args(args)
        .env_remove("ADVCHAN_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

/// Rows of a CSV as field vectors, header first.
fn rows(text: &str) -> Vec<Vec<String>> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(text.as_bytes());
    r.records()
        .map(|rec| rec.unwrap().iter().map(String::from).collect())
        .collect()
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

const PASSIVE: &str = r#"{
  "schema_version": 1,
  "label": "passive",
  "channel": {"kind": "erasure", "q": 0.0},
  "p": 0.1,
  "code": {"type": "chunked", "n": 32, "theta": 0.25, "num_messages": 4, "num_keys": 2, "code_seed": 3},
  "adversary": {"type": "passive"}
}"#;

#[test]
fn capacity_rows_and_cutoffs() {
    let text = stdout(&advchan(&[
        "capacity",
        "--model",
        "erasure-no-fb",
        "--q",
        "0",
        "--q",
        "0.3",
        "--q",
        "0.6",
        "--p-start",
        "0",
        "--p-stop",
        "0.6",
        "--p-step",
        "0.05",
    ]));
    let rows = rows(&text);
    assert_eq!(rows[0], ["model", "q", "p", "value", "note"]);
    assert_eq!(rows.len(), 1 + 3 * 13);
    for r in &rows[1..] {
        let p: f64 = r[2].parse().unwrap();
        let v: f64 = r[3].parse().unwrap();
        if p >= 0.5 {
            assert_eq!(v, 0.0, "{r:?}");
        } else {
            assert!(v > 0.0, "{r:?}");
        }
    }
    let row = rows
        .iter()
        .find(|r| r[1] == "0.3" && r[2] == "0.1")
        .unwrap();
    assert!((row[3].parse::<f64>().unwrap() - 0.56).abs() < 1e-12);
}

#[test]
fn flip_bounds_coincide_without_noise() {
    let text = stdout(&advchan(&[
        "capacity",
        "--model",
        "flip-upper",
        "--model",
        "flip-lower",
        "--q",
        "0",
        "--p-stop",
        "0.3",
        "--p-step",
        "0.01",
    ]));
    let rows = rows(&text);
    let half = (rows.len() - 1) / 2;
    for i in 1..=half {
        assert_eq!(rows[i][2], rows[i + half][2]);
        assert_eq!(rows[i][3], rows[i + half][3]);
    }
}

#[test]
fn domain_errors_become_notes() {
    let text = stdout(&advchan(&[
        "capacity",
        "--model",
        "flip-upper",
        "--q",
        "0.7",
        "--p-stop",
        "0.02",
    ]));
    let rows = rows(&text);
    assert!(rows[1..]
        .iter()
        .all(|r| r[3].is_empty() && r[4].contains("q")));
}

#[test]
fn p0_table() {
    let text = stdout(&advchan(&[
        "p0", "--q", "0", "--q", "0.1", "--q", "0.2", "--q", "0.4", "--tol", "1e-12",
    ]));
    let rows = rows(&text);
    assert_eq!(rows[0], ["q", "p0", "residual", "note"]);
    for r in &rows[1..] {
        let p0: f64 = r[1].parse().unwrap();
        let res: f64 = r[2].parse().unwrap();
        assert!(p0 > 0.0 && p0 < 0.25);
        assert!(res.abs() < 1e-12);
    }
    assert!((rows[1][1].parse::<f64>().unwrap() - 0.0804).abs() < 1e-4);
}

#[test]
fn simulate_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let sc = write(dir.path(), "s.json", PASSIVE);
    let a = stdout(&advchan(&[
        "simulate",
        "--scenario",
        &sc,
        "--trials",
        "200",
        "--seed",
        "4",
    ]));
    let b = stdout(&advchan(&[
        "simulate",
        "--scenario",
        &sc,
        "--trials",
        "200",
        "--seed",
        "4",
    ]));
    assert_eq!(a, b);
    let rows = rows(&a);
    let col = |name: &str| rows[0].iter().position(|c| c == name).unwrap();
    assert_eq!(rows[1][col("p_hat")], "0.0");
    assert_eq!(rows[1][col("trials")], "200");

    let out = dir.path().join("r.csv");
    stdout(&advchan(&[
        "simulate",
        "--scenario",
        &sc,
        "--trials",
        "200",
        "--seed",
        "4",
        "--out",
        out.to_str().unwrap(),
    ]));
    assert_eq!(fs::read_to_string(out).unwrap(), a);
}

#[test]
fn thread_count_does_not_change_results() {
    let dir = TempDir::new().unwrap();
    let sc = write(
        dir.path(),
        "s.json",
        &PASSIVE
            .replace(r#"{"type": "passive"}"#, r#"{"type": "iid", "prob": 0.2}"#)
            .replace("\"q\": 0.0", "\"q\": 0.2"),
    );
    let args = ["simulate", "--scenario", sc.as_str(), "--trials", "300"];
    let default = stdout(&advchan(&args));
    let one = Command::new(env!("CARGO_BIN_EXE_advchan"))
        .args(args)
        .env("ADVCHAN_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(stdout(&one), default);
    let bad = Command::new(env!("CARGO_BIN_EXE_advchan"))
        .args(args)
        .env("ADVCHAN_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn arq_rate() {
    let dir = TempDir::new().unwrap();
    let sc = write(
        dir.path(),
        "arq.json",
        r#"{"schema_version": 1, "channel": {"kind": "erasure", "q": 0.1}, "p": 0.2,
            "code": {"type": "arq", "k": 1000}, "adversary": {"type": "iid", "prob": 0.2},
            "transmitter_feedback": true}"#,
    );
    let rows = rows(&stdout(&advchan(&[
        "simulate",
        "--scenario",
        &sc,
        "--trials",
        "100",
        "--seed",
        "1",
    ])));
    let col = |name: &str| rows[0].iter().position(|c| c == name).unwrap();
    let uses: f64 = rows[1][col("mean_channel_uses")].parse().unwrap();
    let ratio = uses / 1000.0 * 0.72;
    assert!((ratio - 1.0).abs() < 0.05, "{ratio}");
    assert_eq!(rows[1][col("errors")], "0");
}

#[test]
fn sweep_rows() {
    let dir = TempDir::new().unwrap();
    let sc = write(dir.path(), "s.json", PASSIVE);
    let grid = write(
        dir.path(),
        "g.json",
        r#"[{"p": 0.05}, {"p": 0.1}, {"p": 0.15}]"#,
    );
    let rows = rows(&stdout(&advchan(&[
        "sweep",
        "--scenario",
        &sc,
        "--grid",
        &grid,
        "--trials",
        "50",
    ])));
    assert_eq!(rows.len(), 4);
    let status = rows[0].iter().position(|c| c == "status").unwrap();
    assert!(rows[1..].iter().all(|r| r[status] == "ok"));

    let bad_point = write(dir.path(), "b.json", r#"[{"p": 0.05}, {"p": 7}]"#);
    let rows = self::rows(&stdout(&advchan(&[
        "sweep",
        "--scenario",
        &sc,
        "--grid",
        &bad_point,
        "--trials",
        "10",
    ])));
    assert_eq!(rows.len(), 3);
    assert_ne!(rows[2][status], "ok");

    let empty = write(dir.path(), "e.json", "[]");
    assert_eq!(
        advchan(&["sweep", "--scenario", &sc, "--grid", &empty])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let malformed = write(
        dir.path(),
        "m.json",
        "{\n  \"schema_version\": 1,\n  oops\n}",
    );
    let out = advchan(&["simulate", "--scenario", &malformed]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));

    let domain = write(
        dir.path(),
        "d.json",
        &PASSIVE.replace("\"p\": 0.1", "\"p\": 1.5"),
    );
    assert_eq!(
        advchan(&["simulate", "--scenario", &domain]).status.code(),
        Some(3)
    );

    let missing = dir.path().join("nope.json");
    assert_eq!(
        advchan(&["simulate", "--scenario", missing.to_str().unwrap()])
            .status
            .code(),
        Some(4)
    );

    let sc = write(dir.path(), "s.json", PASSIVE);
    let unwritable = dir.path().join("no/such/dir/out.csv");
    let out = advchan(&[
        "simulate",
        "--scenario",
        &sc,
        "--trials",
        "5",
        "--out",
        unwritable.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(4));

    assert_eq!(
        advchan(&["capacity", "--model", "nope", "--q", "0"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        advchan(&[
            "capacity",
            "--model",
            "erasure-fb",
            "--q",
            "0",
            "--p-step",
            "0"
        ])
        .status
        .code(),
        Some(2)
    );
}

#[test]
fn attack_demo_logs_phases() {
    let dir = TempDir::new().unwrap();
    let sc = write(
        dir.path(),
        "w.json",
        r#"{"schema_version": 1, "label": "demo", "channel": {"kind": "erasure", "q": 0.2}, "p": 0.3,
            "code": {"type": "chunked", "n": 16, "theta": 0.25, "num_messages": 16, "num_keys": 2, "code_seed": 2},
            "adversary": {"type": "wait_snoop_push", "epsilon": 0.02}}"#,
    );
    let log = stdout(&advchan(&["attack-demo", "--scenario", &sc, "--seed", "5"]));
    for needle in [
        "phase 1: steps 1..=",
        "switch: y1 = ",
        "phase 2: steps ",
        "push: disagreements=",
        "decoder: verdict=",
    ] {
        assert!(log.contains(needle), "missing {needle:?} in\n{log}");
    }
    assert_eq!(
        log,
        stdout(&advchan(&["attack-demo", "--scenario", &sc, "--seed", "5"]))
    );
}
