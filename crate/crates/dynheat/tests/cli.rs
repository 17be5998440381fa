use std::fs;
use std::path::Path;

use dynheat::cli::{run, Summary, EXIT_ERROR, EXIT_FAIL, EXIT_PASS};

fn call(out: &Path, args: &[&str]) -> i32 {
    let mut v = vec!["dynheat".to_string(), "--out".into(), out.display().to_string()];
    v.extend(args.iter().map(|s| s.to_string()));
    run(v)
}

fn summaries(path: &Path) -> Vec<Summary> {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn eval_kernel_k0_collapse_point() {
    let dir = tempfile::tempdir().unwrap();
    let code = call(dir.path(), &["eval-kernel", "--kernel", "g_ldd", "--kappa", "0", "--r", "0", "--xn", "1", "--yn", "0", "--t", "1"]);
    assert_eq!(code, EXIT_PASS);
    let s = summaries(&dir.path().join("eval-kernel.summary.json"));
    // P(0, 2) in the plane is 1/(2π)
    assert!((s[0].value.unwrap() - 0.5 / std::f64::consts::PI).abs() < 1e-12);
    let csv = fs::read_to_string(dir.path().join("eval-kernel.csv")).unwrap();
    assert!(csv.starts_with("claim,epsilon,delta,kappa,theta,N,kernel"));
}

#[test]
fn mass_check_passes_and_tags_rows() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(call(dir.path(), &["mass-check"]), EXIT_PASS);
    let s = summaries(&dir.path().join("mass-check.summary.json"));
    assert_eq!(s.len(), 3);
    assert!(s.iter().all(|x| x.pass && x.value.unwrap() <= 1e-6));
    let mut rdr = csv::Reader::from_path(dir.path().join("mass-check.csv")).unwrap();
    let n = rdr.records().map(|r| r.unwrap()).inspect(|r| assert!(!r[0].is_empty())).count();
    assert_eq!(n, 3 * 54 * 9);
}

#[test]
fn limit_rate_reports_slope() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(call(dir.path(), &["limit-rate", "--which", "eps_to_0"]), EXIT_PASS);
    let s = summaries(&dir.path().join("limit-rate.summary.json"));
    assert_eq!(s[0].experiment, "eps_to_0");
    assert!((s[0].slope.unwrap() - 0.5).abs() < 0.1);
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, r#"{"params": {"epsilon": 1, "delta": 1, "kappa": 1, "dim": 2, "extra": 0}}"#).unwrap();
    assert_eq!(call(dir.path(), &["--config", cfg.to_str().unwrap(), "solve"]), EXIT_ERROR);
    fs::write(&cfg, r#"{"params": {"epsilon": -1, "delta": 1, "kappa": 1, "dim": 2}}"#).unwrap();
    assert_eq!(call(dir.path(), &["--config", cfg.to_str().unwrap(), "solve"]), EXIT_ERROR);
    assert_eq!(call(dir.path(), &["--config", "/nonexistent/cfg.json", "solve"]), EXIT_ERROR);
    assert_eq!(call(dir.path(), &["limit-rate", "--which", "no_such_limit"]), EXIT_ERROR);
    assert_eq!(call(dir.path(), &["no-such-command"]), EXIT_ERROR);
}

#[test]
fn failing_check_exits_1_and_still_writes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("tight.json");
    fs::write(&cfg, r#"{"trace": {"slope_tolerance": 0.0, "vanish_threshold": 1.0}}"#).unwrap();
    let code = call(dir.path(), &["--config", cfg.to_str().unwrap(), "bounds-check"]);
    assert_eq!(code, EXIT_FAIL);
    let s = summaries(&dir.path().join("bounds-check.summary.json"));
    let get = |n: &str| s.iter().find(|x| x.experiment == n).unwrap().pass;
    assert!(!get("trace_blowup"));
    assert!(get("trace_vanish"));
    assert!(dir.path().join("bounds-check.trace.csv").exists());
}

#[test]
fn report_collects_summaries() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(call(dir.path(), &["report"]), EXIT_ERROR);
    assert_eq!(call(dir.path(), &["solve"]), EXIT_PASS);
    assert_eq!(call(dir.path(), &["opnorm"]), EXIT_PASS);
    assert_eq!(call(dir.path(), &["report"]), EXIT_PASS);
    let md = fs::read_to_string(dir.path().join("report.md")).unwrap();
    assert!(md.contains("## opnorm") && md.contains("## solve"));
    assert!(md.contains("witness_sup_norm"));
}

#[test]
fn outputs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        assert_eq!(call(d.path(), &["--threads", "1", "bounds-check"]), EXIT_FAIL);
        assert_eq!(call(d.path(), &["solve"]), EXIT_PASS);
    }
    for name in ["bounds-check.sandwich.csv", "bounds-check.trace.csv", "bounds-check.summary.json", "solve.csv"] {
        assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap(), "{name}");
    }
}
