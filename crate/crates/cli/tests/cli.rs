use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_localdirac"))
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin()
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = run(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p
}

fn floats(csv: &str) -> Vec<f64> {
    csv.lines().map(|l| l.parse().unwrap()).collect()
}

/// `(xi, [lambda_k])` per component from a report's `result`.
fn components(report: &Value) -> Vec<(f64, Vec<f64>)> {
    let re = |v: &Value| v.as_f64().unwrap_or_else(|| v[0].as_f64().unwrap());
    report["result"]["components"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| {
            (
                re(&c["xi"]),
                c["lambdas"].as_array().unwrap().iter().map(re).collect(),
            )
        })
        .collect()
}

fn close(a: &[(f64, Vec<f64>)], b: &[(f64, Vec<f64>)], tol: f64) -> bool {
    a.len() == b.len()
        && a.iter().zip(b).all(|((x, u), (y, v))| {
            (x - y).abs() <= tol
                && u.len() == v.len()
                && u.iter().zip(v).all(|(p, q)| (p - q).abs() <= tol)
        })
}

const TWO: &str =
    r#"{"components":[{"xi":-0.5,"lambdas":[0.4,0.3]},{"xi":0.7,"lambdas":[0.6,-0.2]}]}"#;

fn without_timing(text: &str) -> Value {
    let mut v: Value = serde_json::from_str(text).unwrap();
    v.as_object_mut().unwrap().remove("timing");
    v
}

#[test]
fn gen_moments_first_order_dirac() {
    let dir = TempDir::new().unwrap();
    write(
        &dir,
        "spec.json",
        r#"{"components":[{"xi":2,"lambdas":[1,1]}]}"#,
    );
    let csv = ok(
        dir.path(),
        &[
            "gen-moments",
            "--spec",
            "spec.json",
            "-d",
            "4",
            "--format",
            "csv",
        ],
    );
    assert_eq!(floats(&csv), [1.0, 3.0, 8.0, 20.0, 48.0]);
    let json: Value = serde_json::from_str(&ok(
        dir.path(),
        &["gen-moments", "--spec", "spec.json", "-d", "4"],
    ))
    .unwrap();
    assert_eq!(
        json["moments"],
        serde_json::json!([1.0, 3.0, 8.0, 20.0, 48.0])
    );
}

#[test]
fn gen_moments_rejects_empty_mixture() {
    let dir = TempDir::new().unwrap();
    write(&dir, "spec.json", r#"{"components":[]}"#);
    let out = run(
        dir.path(),
        &["gen-moments", "--spec", "spec.json", "-d", "3"],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no components"));
}

#[test]
fn gen_moments_pareto() {
    let dir = TempDir::new().unwrap();
    write(&dir, "spec.json", r#"{"pareto":{"alpha":4.5,"xi":2.0}}"#);
    let m = floats(&ok(
        dir.path(),
        &[
            "gen-moments",
            "--spec",
            "spec.json",
            "-d",
            "3",
            "--format",
            "csv",
        ],
    ));
    for (i, v) in m.iter().enumerate() {
        let want = 4.5 * 2f64.powi(i as i32) / (4.5 - i as f64);
        assert!((v - want).abs() <= 1e-12 * want, "m_{i} = {v}, want {want}");
    }
}

#[test]
fn recover_round_trip() {
    let dir = TempDir::new().unwrap();
    write(&dir, "spec.json", TWO);
    ok(
        dir.path(),
        &[
            "gen-moments",
            "--spec",
            "spec.json",
            "-d",
            "6",
            "--out",
            "m.json",
        ],
    );
    let report: Value = serde_json::from_str(&ok(
        dir.path(),
        &["recover", "--moments", "m.json", "-r", "2", "-l", "1"],
    ))
    .unwrap();
    let want = vec![(-0.5, vec![0.4, 0.3]), (0.7, vec![0.6, -0.2])];
    assert!(
        close(&components(&report), &want, 1e-8),
        "{}",
        report["result"]
    );
    assert_eq!(report["seed"], 0);
    assert_eq!(report["input_sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn elimination_agrees_with_default() {
    let dir = TempDir::new().unwrap();
    let spec =
        r#"{"components":[{"xi":-0.4,"lambdas":[0.35,0.2]},{"xi":0.9,"lambdas":[0.65,-0.5]}]}"#;
    write(&dir, "spec.json", spec);
    ok(
        dir.path(),
        &[
            "gen-moments",
            "--spec",
            "spec.json",
            "-d",
            "6",
            "--out",
            "m.json",
        ],
    );
    let base = ["recover", "--moments", "m.json", "-r", "2", "-l", "1"];
    let a: Value = serde_json::from_str(&ok(dir.path(), &base)).unwrap();
    let b: Value = serde_json::from_str(&ok(
        dir.path(),
        &[&base[..], &["--method", "elimination"]].concat(),
    ))
    .unwrap();
    assert!(
        close(&components(&a), &components(&b), 1e-6),
        "{} vs {}",
        a["result"],
        b["result"]
    );
}

#[test]
fn insufficient_moments_is_a_validation_error() {
    let dir = TempDir::new().unwrap();
    write(&dir, "m.csv", "1\n0.5\n0.3\n");
    let out = run(
        dir.path(),
        &["recover", "--moments", "m.csv", "-r", "2", "-l", "1"],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("insufficient moments"));
}

#[test]
fn negative_density_is_a_numerical_error() {
    let dir = TempDir::new().unwrap();
    write(
        &dir,
        "model.json",
        r#"{"sigma":1,"components":[{"xi":0,"weight":1,"alphas":[0.5]}]}"#,
    );
    let out = run(
        dir.path(),
        &["statmix", "sample", "--model", "model.json", "-n", "10"],
    );
    assert_eq!(
        out.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn reports_are_deterministic() {
    let dir = TempDir::new().unwrap();
    write(&dir, "spec.json", TWO);
    ok(
        dir.path(),
        &[
            "gen-moments",
            "--spec",
            "spec.json",
            "-d",
            "6",
            "--out",
            "m.json",
        ],
    );
    let args = [
        "recover",
        "--moments",
        "m.json",
        "-r",
        "2",
        "-l",
        "1",
        "--seed",
        "7",
    ];
    let a = ok(dir.path(), &args);
    let b = ok(dir.path(), &args);
    let single = bin()
        .current_dir(dir.path())
        .env("LOCALDIRAC_THREADS", "1")
        .args(args)
        .output()
        .unwrap();
    assert!(single.status.success());
    let c = String::from_utf8(single.stdout).unwrap();
    let strip = |s: &str| serde_json::to_string(&without_timing(s)).unwrap();
    assert_eq!(strip(&a), strip(&b));
    assert_eq!(strip(&a), strip(&c));
    assert_eq!(without_timing(&a)["seed"], 7);
}

#[test]
fn fourier_round_trip() {
    let dir = TempDir::new().unwrap();
    write(
        &dir,
        "sig.json",
        r#"{"breakpoints":[-2.0,-0.5,1.2],"values":[1.0,-0.5],"slopes":[0.3,0.8]}"#,
    );
    ok(
        dir.path(),
        &[
            "fourier", "coeffs", "--signal", "sig.json", "-s", "6", "--format", "csv", "--out",
            "c.csv",
        ],
    );
    assert_eq!(
        fs::read_to_string(dir.path().join("c.csv"))
            .unwrap()
            .lines()
            .count(),
        13
    );
    let report: Value = serde_json::from_str(&ok(
        dir.path(),
        &[
            "fourier",
            "recon",
            "--coeffs",
            "c.csv",
            "--segments",
            "3",
            "--truth",
            "sig.json",
        ],
    ))
    .unwrap();
    let errors = &report["diagnostics"]["errors"];
    for key in ["breakpoints", "values", "slopes"] {
        assert!(
            errors[key].as_f64().unwrap() <= 1e-8,
            "{key}: {}",
            errors[key]
        );
    }
}

#[test]
fn fourier_zero_coefficients_give_zero_signal() {
    let dir = TempDir::new().unwrap();
    let csv: String = (-3..=3).map(|k| format!("{k},0,0\n")).collect();
    write(&dir, "c.csv", &csv);
    let report: Value = serde_json::from_str(&ok(
        dir.path(),
        &["fourier", "recon", "--coeffs", "c.csv", "-r", "2"],
    ))
    .unwrap();
    assert_eq!(report["result"]["values"], serde_json::json!([]));
}

#[test]
fn statmix_sample_and_estimate() {
    let dir = TempDir::new().unwrap();
    let model = r#"{"sigma":1,"components":[{"xi":-2,"weight":0.5,"alphas":[]},{"xi":2,"weight":0.5,"alphas":[]}]}"#;
    write(&dir, "model.json", model);
    let sample_args = [
        "statmix",
        "sample",
        "--model",
        "model.json",
        "-n",
        "50000",
        "--seed",
        "3",
        "--format",
        "csv",
    ];
    let a = ok(dir.path(), &sample_args);
    assert_eq!(a, ok(dir.path(), &sample_args));
    assert_eq!(a.lines().count(), 50_000);
    fs::write(dir.path().join("x.csv"), &a).unwrap();
    let report: Value = serde_json::from_str(&ok(
        dir.path(),
        &[
            "statmix",
            "estimate",
            "--sample",
            "x.csv",
            "--components",
            "2",
            "--order",
            "0",
        ],
    ))
    .unwrap();
    let comps = report["result"]["components"].as_array().unwrap();
    assert_eq!(comps.len(), 2);
    assert!((comps[0]["xi"].as_f64().unwrap() + 2.0).abs() < 0.2);
    assert!((comps[1]["xi"].as_f64().unwrap() - 2.0).abs() < 0.2);
    assert!((comps[0]["weight"].as_f64().unwrap() - 0.5).abs() < 0.1);
}

#[test]
fn ideal_check_on_first_order_vector() {
    let dir = TempDir::new().unwrap();
    write(
        &dir,
        "spec.json",
        r#"{"components":[{"xi":0.8,"lambdas":[1,-0.6]}]}"#,
    );
    ok(
        dir.path(),
        &[
            "gen-moments",
            "--spec",
            "spec.json",
            "-d",
            "10",
            "--out",
            "m.json",
        ],
    );
    for family in ["fij", "delta3", "cremona"] {
        let report: Value = serde_json::from_str(&ok(
            dir.path(),
            &["ideal-check", "--moments", "m.json", "--family", family],
        ))
        .unwrap();
        assert_eq!(report["diagnostics"]["all_pass"], true, "{family}");
    }
    write(&dir, "spec2.json", TWO);
    ok(
        dir.path(),
        &[
            "gen-moments",
            "--spec",
            "spec2.json",
            "-d",
            "10",
            "--out",
            "m2.json",
        ],
    );
    let report: Value = serde_json::from_str(&ok(
        dir.path(),
        &["ideal-check", "--moments", "m2.json", "--family", "fij"],
    ))
    .unwrap();
    assert_eq!(report["diagnostics"]["all_pass"], false);
}

#[test]
fn unknown_family_is_rejected() {
    let dir = TempDir::new().unwrap();
    write(&dir, "m.csv", "1\n2\n3\n4\n5\n");
    let out = run(
        dir.path(),
        &["ideal-check", "--moments", "m.csv", "--family", "nonsense"],
    );
    assert_eq!(out.status.code(), Some(2));
}
