use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use captrans::cli::files::{plan_json, read_measure, read_plan, rounded_plan};
use captrans::cost::{ground_absdiff, lift_tiered};
use captrans::setfun::Universe;
use captrans::transport::{solve_maxplus, validate_plan};
use serde_json::Value;
use tempfile::TempDir;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
}

fn captrans(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_captrans"))
        .args(args)
        .env_remove("CAPTRANS_MAX_N")
        .output()
        .unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout_json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

fn write(dir: &TempDir, name: &str, body: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, body).unwrap();
    p
}

#[test]
fn transform_additive_maxplus() {
    let out = captrans(&[
        "transform",
        "--measure",
        path(&data("additive_mu.json")),
        "--kind",
        "maxplus",
    ]);
    let v = stdout_json(&out);
    let expected = [0.0, 0.2, 0.3, 0.2, 0.5, 0.2, 0.3, 0.2];
    for (mask, e) in expected.iter().enumerate() {
        assert_eq!(v["values"][mask.to_string()].as_f64().unwrap(), *e);
    }
    assert_eq!(v["kind"], "maxplus");
}

#[test]
fn transform_lacking_nu_mobius() {
    let out = captrans(&[
        "transform",
        "--measure",
        path(&data("lacking_nu.json")),
        "--kind",
        "mobius",
    ]);
    let v = stdout_json(&out);
    for mask in 0..8 {
        let expected = match mask {
            1 => 0.2,
            7 => 0.8,
            _ => 0.0,
        };
        assert_eq!(v["values"][mask.to_string()].as_f64().unwrap(), expected);
    }
}

#[test]
fn transform_null_capacity() {
    let dir = TempDir::new().unwrap();
    let values: Vec<String> = (1..8).map(|m| format!("\"{m}\": 0")).collect();
    let f = write(
        &dir,
        "null.json",
        &format!("{{\"n\": 3, \"values\": {{{}}}}}", values.join(",")),
    );
    let v = stdout_json(&captrans(&[
        "transform",
        "--measure",
        path(&f),
        "--kind",
        "mobius",
    ]));
    assert!(v["values"]
        .as_object()
        .unwrap()
        .values()
        .all(|x| x.as_f64() == Some(0.0)));
}

#[test]
fn invalid_measure_names_the_pair() {
    let dir = TempDir::new().unwrap();
    let f = write(
        &dir,
        "bad.json",
        r#"{"n": 2, "values": {"x1": 0.7, "x2": 0.2, "x1+x2": 0.5}}"#,
    );
    let out = captrans(&["transform", "--measure", path(&f), "--kind", "mobius"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(
        err.contains("mu(x1) = 0.7") && err.contains("mu(x1+x2) = 0.5"),
        "{err}"
    );
}

#[test]
fn malformed_files_exit_two() {
    let dir = TempDir::new().unwrap();
    let cases = [
        ("syntax.json", r#"{"n": 2, "values": {"#),
        (
            "missing.json",
            r#"{"n": 2, "values": {"x1": 0.5, "x2": 0.5}}"#,
        ),
        (
            "sparse.json",
            r#"{"n": 2, "sparse": true, "values": {"x1": 0.5, "x2": 0.5}}"#,
        ),
        (
            "unknown.json",
            r#"{"n": 2, "values": {"x1": 0.5, "x2": 0.5, "x1+x9": 1}}"#,
        ),
        (
            "twice.json",
            r#"{"n": 2, "values": {"1": 0.5, "x1": 0.5, "x2": 0.5, "3": 1}}"#,
        ),
    ];
    for (name, body) in cases {
        let f = write(&dir, name, body);
        let out = captrans(&["transform", "--measure", path(&f), "--kind", "maxplus"]);
        assert_eq!(out.status.code(), Some(2), "{name}");
    }
    let out = captrans(&[
        "transform",
        "--measure",
        "/nonexistent.json",
        "--kind",
        "maxplus",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn empty_set_entry_must_be_zero() {
    let dir = TempDir::new().unwrap();
    let f = write(
        &dir,
        "e.json",
        r#"{"n": 1, "values": {"{}": 0.1, "x1": 1}}"#,
    );
    let out = captrans(&["transform", "--measure", path(&f), "--kind", "maxplus"]);
    assert_eq!(out.status.code(), Some(1));
    let f = write(&dir, "z.json", r#"{"n": 1, "values": {"{}": 0, "x1": 1}}"#);
    assert!(
        captrans(&["transform", "--measure", path(&f), "--kind", "maxplus"])
            .status
            .success()
    );
}

#[test]
fn labelled_measure() {
    let dir = TempDir::new().unwrap();
    let f = write(
        &dir,
        "l.json",
        r#"{"n": 2, "labels": ["rain", "wind"], "values": {"rain": 0.3, "wind": 0.4, "rain+wind": 1}}"#,
    );
    let v = stdout_json(&captrans(&[
        "transform",
        "--measure",
        path(&f),
        "--kind",
        "mobius",
    ]));
    assert_eq!(v["labels"][0], "rain");
    assert!((v["values"]["3"].as_f64().unwrap() - 0.3).abs() < 1e-12);
}

#[test]
fn universe_cap_and_override() {
    let dir = TempDir::new().unwrap();
    let values: Vec<String> = (1..128)
        .map(|m| format!("\"{m}\": {}", if m == 127 { 1 } else { 0 }))
        .collect();
    let f = write(
        &dir,
        "seven.json",
        &format!("{{\"n\": 7, \"values\": {{{}}}}}", values.join(",")),
    );
    let out = captrans(&["transform", "--measure", path(&f), "--kind", "mobius"]);
    assert_eq!(out.status.code(), Some(1));
    let out = Command::new(env!("CARGO_BIN_EXE_captrans"))
        .args(["transform", "--measure", path(&f), "--kind", "mobius"])
        .env("CAPTRANS_MAX_N", "7")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));
}

#[test]
fn transport_additive_tiered_validates() {
    let dir = TempDir::new().unwrap();
    let (mu, nu) = (data("additive_mu.json"), data("additive_nu.json"));
    let out = captrans(&[
        "transport",
        "--mu",
        path(&mu),
        "--nu",
        path(&nu),
        "--method",
        "maxplus",
        "--cost",
        "tiered",
    ]);
    let plan = stdout_json(&out);
    assert_eq!(plan["method"], "maxplus");
    assert!(plan.get("lack_mu").is_some() && plan.get("lack_nu").is_some());
    let f = write(&dir, "plan.json", &String::from_utf8(out.stdout).unwrap());
    let out = captrans(&[
        "validate",
        "--plan",
        path(&f),
        "--mu",
        path(&mu),
        "--nu",
        path(&nu),
    ]);
    let report = stdout_json(&out);
    assert_eq!(report["valid"], true);
    assert_eq!(report["checks_agree"], true);
}

#[test]
fn transport_lacking_reports_lack() {
    let (mu, nu) = (data("lacking_mu.json"), data("lacking_nu.json"));
    let plan = stdout_json(&captrans(&[
        "transport",
        "--mu",
        path(&mu),
        "--nu",
        path(&nu),
        "--method",
        "maxplus",
        "--cost",
        "tiered",
    ]));
    let lack: f64 = plan["lack_mu"]
        .as_object()
        .unwrap()
        .values()
        .map(|v| v.as_f64().unwrap())
        .sum();
    assert!((lack - 0.7).abs() < 1e-9);
    assert_eq!(plan["objective"].as_f64().unwrap(), 3.1);
}

#[test]
fn identical_measures_cost_nothing() {
    let mu = data("additive_mu.json");
    for (method, cost) in [
        ("bpa", "absdiff+kappa"),
        ("mobius", "absdiff+kappa"),
        ("maxplus", "tiered"),
    ] {
        let out = captrans(&[
            "transport",
            "--mu",
            path(&mu),
            "--nu",
            path(&mu),
            "--method",
            method,
            "--cost",
            cost,
        ]);
        let plan = stdout_json(&out);
        assert_eq!(plan["objective"].as_f64().unwrap(), 0.0, "{method}");
    }
}

#[test]
fn method_preconditions_exit_one() {
    let (mu, nu) = (data("lacking_mu.json"), data("lacking_nu.json"));
    let out = captrans(&[
        "transport",
        "--mu",
        path(&mu),
        "--nu",
        path(&nu),
        "--method",
        "bpa",
        "--cost",
        "absdiff+kappa",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("belief"));
    let out = captrans(&[
        "transport",
        "--mu",
        path(&mu),
        "--nu",
        path(&nu),
        "--method",
        "maxplus",
        "--cost",
        "tiered:0.5",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn distance_outputs() {
    let (t4m, t4n) = (data("additive_mu.json"), data("additive_nu.json"));
    let out = captrans(&[
        "distance",
        "--mu",
        path(&t4m),
        "--nu",
        path(&t4n),
        "--cost",
        "absdiff+kappa",
    ]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "0.1\n");
    let out = captrans(&[
        "distance",
        "--mu",
        path(&t4m),
        "--nu",
        path(&t4m),
        "--cost",
        "tiered",
    ]);
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "0\n");
    let (e5m, e5n) = (data("lacking_mu.json"), data("lacking_nu.json"));
    let out = captrans(&[
        "distance",
        "--mu",
        path(&e5m),
        "--nu",
        path(&e5n),
        "--cost",
        "tiered",
    ]);
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "3.1\n");
}

#[test]
fn cost_file() {
    let dir = TempDir::new().unwrap();
    let mu = data("additive_mu.json");
    let cost = write(
        &dir,
        "c.json",
        r#"{"n": 3, "m": 3, "default": 1, "costs": [
            {"from": "{}", "to": "{}", "cost": 0},
            {"from": "x1", "to": "x1", "cost": 0}, {"from": "x2", "to": "x2", "cost": 0},
            {"from": "x3", "to": "x3", "cost": 0}, {"from": "x1+x2", "to": "x1+x2", "cost": 0},
            {"from": "x1+x3", "to": "x1+x3", "cost": 0}, {"from": "x2+x3", "to": "x2+x3", "cost": 0},
            {"from": "X", "to": "X", "cost": 0}]}"#,
    );
    let out = captrans(&[
        "distance",
        "--mu",
        path(&mu),
        "--nu",
        path(&mu),
        "--cost",
        path(&cost),
    ]);
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "0\n");

    let partial = write(
        &dir,
        "p.json",
        r#"{"n": 3, "m": 3, "costs": [{"from": "1", "to": "1", "cost": 0}]}"#,
    );
    let out = captrans(&[
        "distance",
        "--mu",
        path(&mu),
        "--nu",
        path(&mu),
        "--cost",
        path(&partial),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn validate_measure_and_rejected_plan() {
    let dir = TempDir::new().unwrap();
    let mu = data("additive_mu.json");
    let v = stdout_json(&captrans(&["validate", "--measure", path(&mu)]));
    assert_eq!(v["valid"], true);
    assert_eq!(v["additive"], true);

    let (e5m, e5n) = (data("lacking_mu.json"), data("lacking_nu.json"));
    let signed = write(
        &dir,
        "t2.json",
        r#"{"method": "maxplus", "assg": [
            {"from": "x1", "to": "x1", "mass": 0.2}, {"from": "x2", "to": "X", "mass": 0.3},
            {"from": "x3", "to": "X", "mass": 0.5}, {"from": "x1+x2", "to": "X", "mass": 0.1},
            {"from": "x1+x3", "to": "X", "mass": 0.1}, {"from": "x2+x3", "to": "X", "mass": 0.4},
            {"from": "X", "to": "X", "mass": 0.1}],
           "lack_mu": {}, "lack_nu": {"X": -0.7}}"#,
    );
    let out = captrans(&[
        "validate",
        "--plan",
        path(&signed),
        "--mu",
        path(&e5m),
        "--nu",
        path(&e5n),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["valid"], false);
    assert!(report["problems"][0].as_str().unwrap().contains("negative"));

    let conflict = write(
        &dir,
        "c.json",
        r#"{"method": "maxplus", "assg": [{"from": "X", "to": "{}", "mass": 0.1}], "lack_mu": {"X": 0.2}}"#,
    );
    let out = captrans(&[
        "validate",
        "--plan",
        path(&conflict),
        "--mu",
        path(&e5m),
        "--nu",
        path(&e5n),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn output_is_byte_stable() {
    let (mu, nu) = (data("lacking_mu.json"), data("lacking_nu.json"));
    let args = [
        "transport",
        "--mu",
        path(&mu),
        "--nu",
        path(&nu),
        "--method",
        "maxplus",
        "--cost",
        "tiered",
    ];
    let a = captrans(&args);
    let b = captrans(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn plan_file_round_trip() {
    let dir = TempDir::new().unwrap();
    let mu = read_measure(&data("lacking_mu.json"), 6).unwrap();
    let nu = read_measure(&data("lacking_nu.json"), 6).unwrap();
    let c = lift_tiered(&ground_absdiff(&Universe::new(3).unwrap()), 3.0, 4.0).unwrap();
    let plan = rounded_plan(&solve_maxplus(&mu, &nu, &c).unwrap()).with_cost(&c);
    let f = write(
        &dir,
        "plan.json",
        &serde_json::to_string(&plan_json(&plan)).unwrap(),
    );
    let back = read_plan(&f, mu.universe(), nu.universe()).unwrap();
    assert_eq!(back.assg(), plan.assg());
    let before = validate_plan(&plan, &mu, &nu).unwrap().max_violation();
    let after = validate_plan(&back, &mu, &nu).unwrap().max_violation();
    assert_eq!(before.to_bits(), after.to_bits());
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(
        captrans(&["transform", "--kind", "mobius"]).status.code(),
        Some(2)
    );
    assert_eq!(
        captrans(&["transport", "--method", "sinkhorn"])
            .status
            .code(),
        Some(2)
    );
}
