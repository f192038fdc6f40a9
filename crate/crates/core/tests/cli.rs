use std::path::Path;
use std::process::{Command, Output};

use kernel_spectra::report::VerificationReport;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kernel-spectra")).args(args).output().expect("binary runs")
}

fn path_arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("unused.csv");
    assert_eq!(run(&["verify", "--suite", "nonsense"]).status.code(), Some(2));
    assert_eq!(run(&["eigfun", "--j", "0", "--out", path_arg(&p)]).status.code(), Some(2));
    assert_eq!(run(&["spectrum"]).status.code(), Some(2));
    assert_eq!(run(&["spectrum", "--panels", "0", "--out", path_arg(&p)]).status.code(), Some(2));
    assert!(!p.exists());
}

#[test]
fn spectrum_output_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        let out = run(&["spectrum", "--panels", "8", "--count", "5", "--out", path_arg(p)]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    assert_eq!(text.lines().count(), 6);
    assert!(text.starts_with("j,lambda,abs_lambda,sign,multiplicity_group\n1,"));
}

#[test]
fn zero_count_writes_the_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("s.csv");
    assert!(run(&["spectrum", "--panels", "8", "--count", "0", "--out", path_arg(&p)]).status.success());
    assert_eq!(std::fs::read_to_string(&p).unwrap(), "j,lambda,abs_lambda,sign,multiplicity_group\n");
}

#[test]
fn unwritable_output_fails() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("missing").join("s.csv");
    let out = run(&["spectrum", "--panels", "8", "--out", path_arg(&p)]);
    assert!(!out.status.success());
    assert!(!String::from_utf8_lossy(&out.stderr).is_empty());
}

#[test]
fn verify_writes_a_json_report() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("zeta.json");
    let out = run(&["--threads", "1", "verify", "--suite", "zeta", "--json", path_arg(&p)]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "{stdout}");
    assert!(stdout.lines().last().unwrap().ends_with("0 failed"));
    let report = VerificationReport::from_json(&std::fs::read_to_string(&p).unwrap()).unwrap();
    assert_eq!(report.suite, "zeta");
    assert!(report.passed());
    assert!(report.entries.iter().any(|e| e.check_id.starts_with("c13")));
    assert!(report.metadata.grid_size > 0);
}

#[test]
fn iterated_suite_runs_its_criteria() {
    let out = run(&["verify", "--suite", "iterated"]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "{stdout}");
    for c in ["c01", "c02", "c20"] {
        assert!(stdout.lines().any(|l| l.starts_with("PASS") && l.contains(c)), "{c} missing");
    }
}

#[test]
fn eigfun_samples_are_bounded() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("phi.csv");
    let out = run(&["eigfun", "--j", "1", "--samples", "100", "--out", path_arg(&p)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&p).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x,phi,dphi,P,Q"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 100);
    // |φ| ≤ ½|λ| for the leading eigenvalue ≈ 12.55
    assert!(rows.iter().all(|r| r.len() == 5 && r[0] > 0.0 && r[0] < 1.0 && r[1].abs() <= 6.3));
    assert!(rows.windows(2).all(|w| w[0][0] < w[1][0]));
}
