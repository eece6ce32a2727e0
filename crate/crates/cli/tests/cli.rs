use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;
use tempfile::TempDir;

const WORKED_REFLECTION: &str =
    r#"{"kind":"reflection","m1":1,"m2":1,"A":[[[0,-3]]],"B":[[[1,0]]],"C":[[[0,-2.23606797749979]]]}"#;
const WORKED_PARAMETERS: &str = r#"{"kind":"parameters","m1":1,"m2":1,"alpha":[[[0,-2]]],"S0":[[[1,0]]],"gamma1":[[[1,0]]],"gamma":[[[2.23606797749979,0]]]}"#;
const POSITON_PARAMETERS: &str =
    r#"{"kind":"parameters","m1":1,"m2":1,"alpha":[[[0,0]]],"S0":[[[1,0]]],"gamma1":[[[1,0]]],"gamma":[[[0,-1]]]}"#;
const POSITON_REFLECTION: &str =
    r#"{"kind":"reflection","m1":1,"m2":1,"A":[[[0,-1]]],"B":[[[1,0]]],"C":[[[1,0]]]}"#;
const INDEFINITE_REFLECTION: &str = r#"{"kind":"reflection","m1":1,"m2":1,"A":[[[0,1]]],"B":[[[0.7071067811865476,0]]],"C":[[[0.7071067811865476,0]]]}"#;

struct Run {
    code: i32,
    stderr: String,
}

fn jcomplete(args: &[&str]) -> Run {
    let out = Command::new(env!("CARGO_BIN_EXE_jcomplete")).args(args).output().unwrap();
    Run {
        code: out.status.code().unwrap(),
        stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
    }
}

fn problem(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, text).unwrap();
    path
}

/// Runs `cmd` on `input` with `extra` flags into `dir/out`, returning the exit code.
fn run_into(dir: &TempDir, out: &str, cmd: &str, input: &Path, extra: &[&str]) -> Run {
    let out = dir.path().join(out);
    let mut args = vec![cmd, input.to_str().unwrap(), "--out-dir", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    jcomplete(&args)
}

fn json(path: PathBuf) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn num(v: &Value) -> f64 {
    v.as_f64().unwrap()
}

/// Rows of a long-format CSV, header dropped.
fn csv_rows(path: PathBuf) -> Vec<Vec<String>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn field(row: &[String], i: usize) -> f64 {
    row[i].parse().unwrap()
}

#[test]
fn complete_recovers_worked_parameters() {
    let dir = TempDir::new().unwrap();
    let input = problem(&dir, "r.json", WORKED_REFLECTION);
    let run = run_into(&dir, "out", "complete", &input, &[]);
    assert_eq!(run.code, 0, "{}", run.stderr);

    let p = json(dir.path().join("out/parameters.json"));
    assert_eq!(p["kind"], "parameters");
    let alpha = &p["alpha"][0][0];
    assert!(num(&alpha[0]).abs() < 1e-12 && (num(&alpha[1]) + 2.0).abs() < 1e-12, "{alpha}");
    assert!((num(&p["S0"][0][0][0]) - 1.0).abs() < 1e-12);
    assert!((num(&p["gamma"][0][0][0]) - 5f64.sqrt()).abs() < 1e-12);

    let checks = json(dir.path().join("out/checks.json"));
    assert_eq!(checks["passes"], true);
    assert_eq!(checks["definiteness"], "PositiveDefinite");
    assert_eq!(checks["degree_w"], 1);

    let w = json(dir.path().join("out/W_realization.json"));
    assert_eq!((w["inputs"].as_u64(), w["outputs"].as_u64(), w["states"].as_u64()), (Some(2), Some(2), Some(1)));
}

#[test]
fn complete_with_no_states_gives_identity() {
    let dir = TempDir::new().unwrap();
    let input = problem(&dir, "r.json", r#"{"kind":"reflection","m1":1,"m2":2,"A":[],"B":[],"C":[[],[]]}"#);
    let run = run_into(&dir, "out", "complete", &input, &[]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    let w = json(dir.path().join("out/W_realization.json"));
    assert_eq!(w["states"], 0);
    for i in 0..3 {
        for j in 0..3 {
            let want = if i == j { 1.0 } else { 0.0 };
            assert_eq!(num(&w["D"][i][j][0]), want);
            assert_eq!(num(&w["D"][i][j][1]), 0.0);
        }
    }
}

#[test]
fn complete_rejects_non_contractive_reflection() {
    let dir = TempDir::new().unwrap();
    let input = problem(&dir, "r.json", r#"{"kind":"reflection","m1":1,"m2":1,"A":[[[0,-1]]],"B":[[[1,0]]],"C":[[[2,0]]]}"#);
    let run = run_into(&dir, "out", "complete", &input, &[]);
    assert_eq!(run.code, 2);
    assert!(run.stderr.contains("not contractive on real line"), "{}", run.stderr);
}

#[test]
fn invalid_inputs_exit_with_validation_code() {
    let dir = TempDir::new().unwrap();
    let cases = [
        ("complete", WORKED_PARAMETERS),
        ("scatter", WORKED_REFLECTION),
        ("scatter", "{not json"),
        ("scatter", r#"{"kind":"parameters","m1":1,"m2":1,"alpha":[[[0,-2]]],"S0":[[[1,0]]],"gamma1":[[[1,0]]],"gamma":[[[0,0]]]}"#),
        ("scatter", r#"{"kind":"parameters","m1":1,"m2":1,"alpha":[[[0,-2]]],"S0":[[[1,0]]],"gamma1":[[[1,0],[1,0]]],"gamma":[[[1,0]]]}"#),
        ("complete", r#"{"kind":"reflection","m1":1,"m2":1,"A":[[[0,-3]]],"B":[[[1,0]]],"C":[[[1,0]]],"extra":1}"#),
        ("complete", r#"{"kind":"reflection","m1":0,"m2":1,"A":[],"B":[],"C":[[]]}"#),
        ("complete", r#"{"kind":"reflection","m1":1,"m2":1,"A":[[[0,-3]]],"B":[[[1,0]]],"C":[[[1,0]]],"alpha":[[[0,0]]]}"#),
    ];
    for (k, (cmd, text)) in cases.iter().enumerate() {
        let input = problem(&dir, &format!("bad{k}.json"), text);
        let run = run_into(&dir, "out", cmd, &input, &[]);
        assert_eq!(run.code, 2, "case {k}: {}", run.stderr);
    }
    let input = problem(&dir, "ok.json", WORKED_PARAMETERS);
    for flags in [
        &["--grid-lpoints", "1"][..],
        &["--grid-lmin", "3", "--grid-lmax", "-3"],
        &["--xmax", "-1"],
        &["--tol-grid", "-1e-8"],
    ] {
        let run = run_into(&dir, "out", "scatter", &input, flags);
        assert_eq!(run.code, 2, "{flags:?}: {}", run.stderr);
    }
    let run = run_into(&dir, "out", "scatter", &dir.path().join("missing.json"), &[]);
    assert_eq!(run.code, 2);
}

#[test]
fn scatter_worked_set_is_unitary() {
    let dir = TempDir::new().unwrap();
    let input = problem(&dir, "p.json", WORKED_PARAMETERS);
    let run = run_into(&dir, "out", "scatter", &input, &["--grid-lmin", "-5", "--grid-lmax", "5", "--grid-lpoints", "101"]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    let c = json(dir.path().join("out/coefficients.json"));
    assert_eq!(c["passes"], true);
    assert!(num(&c["unitarity"]["value"]) <= 1e-8);
    assert_eq!(c["kappa"]["mode"], "ClosedForm");
    assert!((num(&c["kappa"]["value"][0][0][0]) - 0.8).abs() < 1e-12);

    let rows = csv_rows(dir.path().join("out/scattering_grid.csv"));
    assert_eq!(rows.len(), 101 * 4);
    for row in rows.iter().filter(|r| r[1] == "R_L") {
        let l = field(row, 0);
        // −i√5/(λ+3i)
        let d = l * l + 9.0;
        let want = (-3.0 * 5f64.sqrt() / d, -l * 5f64.sqrt() / d);
        assert!((field(row, 4) - want.0).abs() < 1e-12 && (field(row, 5) - want.1).abs() < 1e-12, "{row:?}");
    }
}

#[test]
fn scatter_positon_has_symmetric_transmission() {
    let dir = TempDir::new().unwrap();
    let input = problem(&dir, "p.json", POSITON_PARAMETERS);
    let run = run_into(&dir, "out", "scatter", &input, &["--grid-lpoints", "41"]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    let c = json(dir.path().join("out/coefficients.json"));
    assert_eq!(c["kappa"]["mode"], "ZeroRealSpectrum");
    let rows = csv_rows(dir.path().join("out/scattering_grid.csv"));
    let tl: Vec<_> = rows.iter().filter(|r| r[1] == "T_L").collect();
    let tr: Vec<_> = rows.iter().filter(|r| r[1] == "T_R").collect();
    assert_eq!(tl.len(), tr.len());
    for (a, b) in tl.iter().zip(&tr) {
        assert_eq!(a[0], b[0]);
        assert!((field(a, 4) - field(b, 4)).abs() < 1e-12 && (field(a, 5) - field(b, 5)).abs() < 1e-12);
    }
}

#[test]
fn potential_matches_closed_forms() {
    let dir = TempDir::new().unwrap();
    let positon = problem(&dir, "pos.json", POSITON_PARAMETERS);
    assert_eq!(run_into(&dir, "pos", "potential", &positon, &[]).code, 0);
    let rows = csv_rows(dir.path().join("pos/potential.csv"));
    assert_eq!(rows.len(), 101);
    for row in &rows {
        let x = field(row, 0);
        assert!((field(row, 3) + 2.0 / (1.0 + 2.0 * x)).abs() < 1e-12 && field(row, 4).abs() < 1e-12, "{row:?}");
    }
    let s = json(dir.path().join("pos/singularities.json"));
    assert_eq!(s["singularities"].as_array().unwrap().len(), 0);

    let worked = problem(&dir, "w.json", WORKED_PARAMETERS);
    assert_eq!(run_into(&dir, "w", "potential", &worked, &["--xmax", "3", "--xpoints", "31"]).code, 0);
    for row in csv_rows(dir.path().join("w/potential.csv")) {
        let x = field(row.as_slice(), 0);
        let want = -8.0 * 5f64.sqrt() / (5.0 * (4.0 * x).exp() - (-4.0 * x).exp());
        assert!(field(&row, 3).abs() < 1e-12 && (field(&row, 4) - want).abs() <= 1e-12 * (1.0 + want.abs()), "{row:?}");
    }
}

#[test]
fn invert_positon_reflection() {
    let dir = TempDir::new().unwrap();
    let input = problem(&dir, "r.json", POSITON_REFLECTION);
    let run = run_into(&dir, "out", "invert", &input, &[]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    let inv = json(dir.path().join("out/inverse.json"));
    assert_eq!(inv["reflection_residual"]["passes"], true);
    for row in csv_rows(dir.path().join("out/potential.csv")) {
        let x = field(&row, 0);
        assert!((field(&row, 3) + 2.0 / (1.0 + 2.0 * x)).abs() < 1e-10 && field(&row, 4).abs() < 1e-10, "{row:?}");
    }
}

#[test]
fn indefinite_set_reports_one_singularity() {
    let dir = TempDir::new().unwrap();
    let input = problem(&dir, "r.json", INDEFINITE_REFLECTION);
    assert_eq!(run_into(&dir, "inv", "invert", &input, &[]).code, 0);
    let inv = json(dir.path().join("inv/inverse.json"));
    assert_eq!(inv["definiteness"], "NegativeDefinite");

    let params = dir.path().join("inv/parameters.json");
    assert_eq!(run_into(&dir, "pot", "potential", &params, &[]).code, 0);
    let s = json(dir.path().join("pot/singularities.json"));
    let list = s["singularities"].as_array().unwrap();
    assert_eq!(list.len(), 1);
    let x = num(&list[0]["x"]);
    assert!(x > 0.0 && x < 10.0);
    assert_eq!(list[0]["negative_inertia_before"], 1);
    assert_eq!(list[0]["negative_inertia_after"], 0);
    // the potential emitted by invert is the potential of its own parameters
    let a = std::fs::read(dir.path().join("inv/potential.csv")).unwrap();
    let b = std::fs::read(dir.path().join("pot/potential.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn roundtrip_worked_set() {
    let dir = TempDir::new().unwrap();
    let input = problem(&dir, "p.json", WORKED_PARAMETERS);
    let run = run_into(&dir, "out", "roundtrip", &input, &[]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    let r = json(dir.path().join("out/roundtrip.json"));
    assert_eq!(r["passes"], true);
    let s = &r["similarity"][0][0];
    assert!((num(&s[0]) - 1.0).abs() < 1e-9 && num(&s[1]).abs() < 1e-9, "{s}");
    assert_eq!(r["v_points_compared"], 101);
}

#[test]
fn verify_worked_set() {
    let dir = TempDir::new().unwrap();
    let input = problem(&dir, "p.json", WORKED_PARAMETERS);
    let flags = ["--grid-lmin", "-4", "--grid-lmax", "4", "--grid-lpoints", "5", "--xmax", "3", "--xpoints", "7"];
    let run = run_into(&dir, "out", "verify", &input, &flags);
    assert_eq!(run.code, 0, "{}", run.stderr);
    let v = json(dir.path().join("out/verify.json"));
    assert_eq!(v["passes"], true);
    assert!(num(&v["reflection_gap"]["value"]) <= 1e-4);
    assert_eq!(v["reflection_points"], 5);
    assert!(num(&v["derivative_residual"]["value"]) <= 1e-4);
}

#[test]
fn tolerance_flag_overrides_file_table() {
    let dir = TempDir::new().unwrap();
    let strict = WORKED_REFLECTION.replace('}', r#","tolerances":{"grid":1e-30}}"#);
    let input = problem(&dir, "r.json", &strict);
    let run = run_into(&dir, "a", "complete", &input, &[]);
    assert_eq!(run.code, 3, "{}", run.stderr);
    assert_eq!(json(dir.path().join("a/checks.json"))["passes"], false);
    let run = run_into(&dir, "b", "complete", &input, &["--tol-grid", "1e-8"]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    assert_eq!(num(&json(dir.path().join("b/checks.json"))["j_unitarity"]["tol"]), 1e-8);
}

#[test]
fn outputs_are_byte_stable() {
    let dir = TempDir::new().unwrap();
    let input = problem(&dir, "r.json", WORKED_REFLECTION);
    assert_eq!(run_into(&dir, "a", "complete", &input, &[]).code, 0);
    assert_eq!(run_into(&dir, "b", "complete", &input, &[]).code, 0);
    for name in ["parameters.json", "W_realization.json", "checks.json"] {
        let a = std::fs::read(dir.path().join("a").join(name)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(name)).unwrap();
        assert_eq!(a, b, "{name}");
    }
}

#[test]
fn emitted_parameters_reingest_to_a_fixed_point() {
    let dir = TempDir::new().unwrap();
    let input = problem(&dir, "r.json", WORKED_REFLECTION);
    assert_eq!(run_into(&dir, "a", "complete", &input, &[]).code, 0);
    let first = dir.path().join("a/parameters.json");
    assert_eq!(run_into(&dir, "b", "potential", &first, &[]).code, 0);
    assert_eq!(run_into(&dir, "c", "invert", &input, &[]).code, 0);
    let second = dir.path().join("c/parameters.json");
    assert_eq!(std::fs::read(&first).unwrap(), std::fs::read(&second).unwrap());
    assert_eq!(run_into(&dir, "d", "potential", &second, &[]).code, 0);
    assert_eq!(
        std::fs::read(dir.path().join("b/potential.csv")).unwrap(),
        std::fs::read(dir.path().join("d/potential.csv")).unwrap()
    );
}
