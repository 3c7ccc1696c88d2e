use std::process::{Command, Output};

use serde_json::Value;

fn gasket(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gasket"))
        .args(args)
        .env_remove("GASKET_PRECISION")
        .output()
        .expect("binary runs")
}

fn json(args: &[&str]) -> Value {
    let out = gasket(args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn coeffs(v: &Value) -> Vec<String> {
    v["coeffs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c.as_str().unwrap().to_string())
        .collect()
}

#[test]
fn poly_m1_and_t0() {
    let v = json(&["poly", "--which", "M", "--n", "1"]);
    assert_eq!(coeffs(&v["M"]), ["13", "15", "3", "1"]);
    let v = json(&["poly", "--which", "T", "--n", "0"]);
    assert_eq!(coeffs(&v["T"]), ["1", "1"]);
}

#[test]
fn poly_z2_matches_closed_form() {
    // 2(x^4+26x^2+72x+157)(x^2+7)(x+1)^3 / y^9 with x = y^4
    let v = json(&["poly", "--which", "Z", "--n", "2"]);
    assert_eq!(v["Z"]["min_power"], -9);
    let c = coeffs(&v["Z"]);
    assert_eq!(c.len(), 37);
    assert_eq!(c[0], "2198");
    assert_eq!(c[36], "2");
    assert!(c.iter().enumerate().all(|(i, s)| i % 4 == 0 || s == "0"));
}

#[test]
fn enumerate_level_zero() {
    let v = json(&["enumerate", "--n", "0"]);
    assert_eq!(v["Z"]["min_power"], -1);
    assert_eq!(coeffs(&v["Z"]), ["6", "0", "0", "0", "2"]);
}

#[test]
fn zeros_csv_rows() {
    let out = gasket(&["zeros", "--source", "M", "--n", "1", "--format", "csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 4);
    assert_eq!(text.lines().next().unwrap(), "level,source,depth,multiplicity,re,im");
}

#[test]
fn zeros_check_against_exact() {
    let out = gasket(&["zeros", "--source", "T", "--n", "3", "--check"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn pressure_at_one() {
    let v = json(&["pressure", "--y", "1", "--n", "3"]);
    let want = 84.0 * std::f64::consts::LN_2 / 216.0;
    assert!((v["p"].as_f64().unwrap() - want).abs() < 1e-14);
}

#[test]
fn pressure_grid_csv() {
    let out = gasket(&["pressure", "--grid", "1:1e6:5", "--n", "50", "--format", "csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().next().unwrap(), "y,level,p,asymptote,difference");
    assert_eq!(text.lines().count(), 6);
}

#[test]
fn measure_weights_are_rational() {
    let v = json(&["measure", "--kind", "mu", "--n", "1", "--atoms"]);
    assert_eq!(v["finite_mass"]["num"], "1");
    assert_eq!(v["finite_mass"]["den"], "1");
    assert_eq!(v["atoms"].as_array().unwrap().len(), 4);
    let v = json(&["measure", "--kind", "zeta", "--truncation", "40"]);
    assert!(v.get("atoms").is_none());
}

#[test]
fn exit_codes() {
    assert_eq!(gasket(&["poly", "--which", "M", "--n", "7"]).status.code(), Some(3));
    assert_eq!(gasket(&["pressure", "--y", "0", "--n", "2"]).status.code(), Some(4));
    assert_eq!(gasket(&["poly", "--which", "Q", "--n", "1"]).status.code(), Some(2));
    assert_eq!(gasket(&["frobnicate"]).status.code(), Some(2));
    let out = gasket(&["h", "--x", "5"]);
    assert_eq!(out.status.code(), Some(4));
    let out = gasket(&["orbit", "--seed", "-1", "--depth", "21", "--map", "f"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn precision_from_environment() {
    let run = |bits: &str| {
        Command::new(env!("CARGO_BIN_EXE_gasket"))
            .args(["h", "--x", "20"])
            .env("GASKET_PRECISION", bits)
            .output()
            .unwrap()
    };
    assert!(run("53").status.success());
    assert_eq!(run("113").status.code(), Some(3));
    assert_eq!(run("lots").status.code(), Some(2));
}

#[test]
fn verify_quick_passes() {
    let out = gasket(&["verify", "--profile", "quick"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["passed"], true);
    assert_eq!(v["criteria"].as_array().unwrap().len(), 13);
}

#[test]
fn verify_catches_tampered_m1() {
    let out = gasket(&["verify", "--inject", "m-coefficient"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("M_n renormalization recursion identity"), "{err}");
}

#[test]
fn output_file_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for path in [&a, &b] {
        let out = gasket(&["zeros", "--source", "Z", "--n", "4", "--format", "csv", "--output", path.to_str().unwrap()]);
        assert!(out.status.success());
        assert!(out.stdout.is_empty());
    }
    let bytes = std::fs::read(&a).unwrap();
    assert_eq!(bytes, std::fs::read(&b).unwrap());
    assert_eq!(bytes.iter().filter(|&&c| c == b'\n').count(), 1 + 4 * 31);
}

#[test]
fn help_names_the_objects() {
    let cases = [
        ("poly", "Z_n"),
        ("poly", "M_n"),
        ("poly", "T_n"),
        ("zeros", "T_n"),
        ("measure", "ζ_n"),
        ("measure", "μ_n"),
        ("h", "inverse branch h"),
        ("fatou", "Fatou coordinate F"),
        ("pressure", "p_n(y)"),
        ("potential", "m(x)"),
        ("enumerate", "Z_n"),
    ];
    for (cmd, needle) in cases {
        let out = gasket(&[cmd, "--help"]);
        let text = String::from_utf8(out.stdout).unwrap();
        assert!(text.contains(needle), "{cmd} --help lacks {needle}:\n{text}");
    }
}

#[test]
fn fatou_is_real_on_real_axis() {
    let v = json(&["fatou", "--x", "50"]);
    assert_eq!(v["F"]["im"], 0.0);
    assert!(v["abel_residual"].as_f64().unwrap() < 1e-6);
}
