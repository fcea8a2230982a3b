use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ds-painleve"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (header, rows)
}

fn num(s: &str) -> f64 {
    s.parse().unwrap()
}

fn path_str(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_string_lossy().into_owned()
}

#[test]
fn verify_algebra_passes() {
    let o = run(&["verify-algebra"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let out = stdout(&o);
    assert!(out.contains("PASS  [L(1,1), L(-1,1)] = K"));
    assert!(out.contains("PASS  K = h0 + h1 + 2h2 + h3 + h4"));
    assert!(out.contains(", 0 failed"));
    assert!(!out.contains("FAIL"));
}

#[test]
fn injected_sign_flip_is_reported() {
    let o = run(&["verify-algebra", "--inject-fault", "lambda11-sign"]);
    assert_eq!(code(&o), 1);
    let out = stdout(&o);
    assert!(out.contains("FAIL  [L(1,1), L(-1,1)] = K"), "{out}");
    assert!(out.contains("PASS  [L(1,2), L(-1,2)] = K"));
}

#[test]
fn solve_columns_and_digits() {
    let dir = TempDir::new().unwrap();
    let out = path_str(&dir, "run.csv");
    let o = run(&["solve", "--lax", "-o", &out]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let (header, rows) = read_csv(Path::new(&out));
    assert_eq!(
        header,
        ["t", "lambda", "mu", "F0", "F1", "F2", "F3", "F4", "Hprime", "q", "p", "s", "lax_residual"]
    );
    assert!(rows.len() > 10);
    for field in &rows[1] {
        let mantissa = field.trim_start_matches('-').split('e').next().unwrap();
        assert_eq!(mantissa.len(), 18, "{field}");
    }
    assert_eq!(num(&rows[0][0]), 2.6);
    assert_eq!(num(&rows.last().unwrap()[0]), 4.0);
    assert!(rows.iter().all(|r| num(&r[12]) < 1e-7));
    // F2 is mu.
    assert_eq!(rows[3][2], rows[3][5]);
}

#[test]
fn solve_is_deterministic() {
    let a = run(&["solve", "--sample-interval", "0.05"]);
    let b = run(&["solve", "--sample-interval", "0.05"]);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    let rows = stdout(&a).lines().count();
    assert_eq!(rows, 1 + 29);
}

#[test]
fn solve_diagnostics() {
    let o = run(&["solve", "--lax", "--check-hamiltonian", "--roundtrip", "--no-output"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(o.stdout.is_empty());
    let err = stderr(&o);
    for key in ["lax: max compatibility residual", "hamiltonian: max", "roundtrip: max return error", "status: Ok"] {
        assert!(err.contains(key), "{err}");
    }
}

#[test]
fn verify_lax_distinguishes_normalizations() {
    assert_eq!(code(&run(&["verify-lax"])), 0);
    let o = run(&["verify-lax", "--normalization", "sec4"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("(sec4)"));
}

#[test]
fn early_stop_keeps_partial_output() {
    let dir = TempDir::new().unwrap();
    let out = path_str(&dir, "partial.csv");
    let o = run(&["solve", "--t-end", "2.0", "-o", &out]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("SingularTime"));
    let (_, rows) = read_csv(Path::new(&out));
    let last = num(&rows.last().unwrap()[0]);
    assert!(last > 2.414 && last < 2.4143);
}

#[test]
fn usage_errors() {
    assert_eq!(code(&run(&["solve", "--alphas", "1,2"])), 3);
    assert_eq!(code(&run(&["solve", "--normalization", "sum4"])), 3);
    assert_eq!(code(&run(&["solve", "--t0", "1"])), 3);
    assert_eq!(code(&run(&["backlund", "--word", "0,7"])), 3);
    assert_eq!(code(&run(&["frobnicate"])), 3);
    assert_eq!(code(&run(&["solve", "--sweep", "alpha1=0:1:2"])), 3);
    let dir = TempDir::new().unwrap();
    let cfg = path_str(&dir, "bad.json");
    std::fs::write(&cfg, r#"{"t_stop": 3}"#).unwrap();
    assert_eq!(code(&run(&["solve", "--config", &cfg])), 3);
    assert_eq!(code(&run(&["--help"])), 0);
}

#[test]
fn config_file_with_overrides() {
    let dir = TempDir::new().unwrap();
    let cfg = path_str(&dir, "run.json");
    std::fs::write(
        &cfg,
        r#"{"alphas":[0.5,0.5,0.5,0.5],"normalization":"intro4","initial":{"t":3.0,"lambda":0.2,"mu":0.6},"t_end":3.2,"format":"json"}"#,
    )
    .unwrap();
    let o = run(&["solve", "--config", &cfg, "--t-end", "3.5"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let doc: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(doc["meta"]["config"]["t_end"], 3.5);
    assert_eq!(doc["meta"]["config"]["alphas"][0], 0.5);
    let rows = doc["rows"].as_array().unwrap();
    assert_eq!(rows.last().unwrap()[0], 3.5);
    assert_eq!(doc["columns"][8], "Hprime");
}

#[test]
fn backlund_involution_and_identity() {
    let dir = TempDir::new().unwrap();
    let out = path_str(&dir, "b.csv");
    let o = run(&["backlund", "--word", "2,2", "-o", &out]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let (header, rows) = read_csv(Path::new(&out));
    assert_eq!(header, ["t", "lambda", "mu", "image_lambda", "image_mu"]);
    for r in &rows {
        assert!((num(&r[1]) - num(&r[3])).abs() < 1e-12);
        assert!((num(&r[2]) - num(&r[4])).abs() < 1e-12);
    }

    let o = run(&["backlund", "--word", "0", "--alphas", "0,0.7,-0.2,0.45", "-o", &out]);
    assert_eq!(code(&o), 0);
    let (_, rows) = read_csv(Path::new(&out));
    assert!(rows.iter().all(|r| r[1] == r[3] && r[2] == r[4]));

    let o = run(&["backlund", "--word", "0,2,1,4,3", "-o", &out]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stderr(&o).contains("defect against transformed field"));
}

#[test]
fn convert_checks_hamilton_equations() {
    let dir = TempDir::new().unwrap();
    let traj = path_str(&dir, "traj.csv");
    assert_eq!(code(&run(&["solve", "--sample-interval", "0.01", "-o", &traj])), 0);
    let mapped = path_str(&dir, "mapped.csv");
    let o = run(&["convert", "--input", &traj, "-o", &mapped]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let err = stderr(&o);
    assert!(err.contains("s(2) = -49"));
    assert!(err.contains("max relative defect"));
    let (header, rows) = read_csv(Path::new(&mapped));
    assert_eq!(header[..4], ["t", "s", "q", "p"]);
    assert_eq!(rows.len(), 141);

    let single = path_str(&dir, "single.csv");
    std::fs::write(&single, "t,lambda,mu\n2,0,1\n").unwrap();
    let o = run(&["convert", "--input", &single]);
    assert_eq!(code(&o), 0);
    assert!(stderr(&o).contains("check skipped"));
    let line = stdout(&o).lines().nth(1).unwrap().to_string();
    assert!(line.starts_with("2.0000000000000000e0,-4.9000000000000000e1,"), "{line}");
}

#[test]
fn sweep_writes_cases_then_index() {
    let dir = TempDir::new().unwrap();
    let out = path_str(&dir, "sweep");
    let o = bin()
        .args(["solve", "--sweep", "alpha1=0.2:0.8:3,lambda0=0.3:0.5:2", "-o", &out])
        .env("DS_PAINLEVE_THREADS", "2")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let index: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(Path::new(&out).join("index.json")).unwrap()).unwrap();
    let cases = index["cases"].as_array().unwrap();
    assert_eq!(cases.len(), 6);
    for (i, c) in cases.iter().enumerate() {
        assert_eq!(c["case"], i);
        assert!(Path::new(&out).join(c["file"].as_str().unwrap()).exists());
    }
    assert_eq!(cases[5]["values"]["alpha1"], 0.8);
    assert_eq!(cases[5]["values"]["lambda0"], 0.5);

    let bad = bin()
        .args(["solve", "--sweep", "alpha1=0.2:0.8:2", "-o", &out])
        .env("DS_PAINLEVE_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(code(&bad), 3);
}
