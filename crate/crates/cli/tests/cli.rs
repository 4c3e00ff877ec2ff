use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use thermogauge_cli::{read_csv, TwirlCheck, COLUMNS};

fn thermogauge(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_thermogauge"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

#[test]
fn help_and_version_succeed() {
    let dir = tempfile::tempdir().unwrap();
    for args in [&["--help"][..], &["--version"], &["lmg", "--help"]] {
        let o = thermogauge(args, dir.path());
        assert_eq!(code(&o), 0, "{args:?}");
        assert!(!o.stdout.is_empty());
    }
}

#[test]
fn usage_and_input_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["lz", "--bogus"][..],
        &["lz", "--a", "0"],
        &["lmg", "--j", "0.3"],
        &["lz", "--steps", "1"],
        &["twirl-check", "--dim", "3", "--pattern", "1,1"],
        &["twirl-check", "--samples", "1"],
        &["custom"],
        &["deriv", "--input", "missing.csv"],
    ] {
        let o = thermogauge(args, dir.path());
        assert_eq!(code(&o), 1, "{args:?}");
        assert!(String::from_utf8_lossy(&o.stderr).contains("error"));
    }
}

#[test]
fn numerical_failure_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("h0.json"),
        r#"{"dim":2,"re":[[1e308,1e308],[1e308,-1e308]]}"#,
    )
    .unwrap();
    fs::write(dir.path().join("h1.json"), r#"{"dim":2,"re":[[0,0],[0,0]]}"#).unwrap();
    let o = thermogauge(
        &["custom", "--h0", "h0.json", "--h1", "h1.json", "--steps", "2"],
        dir.path(),
    );
    assert_eq!(code(&o), 2);
}

#[test]
fn lz_scan_writes_all_columns() {
    let dir = tempfile::tempdir().unwrap();
    let o = thermogauge(&["lz", "--steps", "11"], dir.path());
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), COLUMNS.join(","));
    assert_eq!(lines.count(), 11);
}

#[test]
fn custom_model_from_json() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("h0.json"), r#"{"dim":2,"re":[[1,0],[0,-1]]}"#).unwrap();
    fs::write(dir.path().join("h1.json"), r#"{"dim":2,"re":[[0,1],[1,0]]}"#).unwrap();
    let o = thermogauge(
        &[
            "custom",
            "--h0",
            "h0.json",
            "--h1",
            "h1.json",
            "--steps",
            "5",
            "--delta-g",
            "0.1",
            "--out",
            "s.csv",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rows = read_csv(&dir.path().join("s.csv")).unwrap();
    assert_eq!(rows.len(), 5);
    // H(0) = σz has ground state |1>, and <σx> vanishes there.
    assert!((rows[0].e0 + 1.0).abs() < 1e-12);
    assert!(rows[0].w_u.abs() < 1e-12);
    for r in &rows {
        assert!((r.w_inv + r.q_c - r.w_u).abs() < 1e-12);
    }
}

#[test]
fn deriv_reads_scan_output() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        code(&thermogauge(&["lz", "--steps", "21", "--out", "s.csv"], dir.path())),
        0
    );
    let o = thermogauge(
        &["deriv", "--input", "s.csv", "--column", "E0", "--order", "2"],
        dir.path(),
    );
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().next().unwrap(), "g0,d2_E0");
    assert_eq!(text.lines().count(), 22);

    let o = thermogauge(&["deriv", "--input", "s.csv", "--column", "nope"], dir.path());
    assert_eq!(code(&o), 1);
}

#[test]
fn twirl_check_reports_json() {
    let dir = tempfile::tempdir().unwrap();
    let o = thermogauge(&["twirl-check", "--samples", "2000", "--seed", "3"], dir.path());
    assert_eq!(code(&o), 0);
    let report: TwirlCheck = serde_json::from_slice(&o.stdout).unwrap();
    assert!(report.pass);
    assert!(report.stderr > 0.0);
}

#[test]
fn config_file_supplies_defaults_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("cfg.json"),
        r#"{"steps": 7, "g0_max": 0.3, "eps": 0.05}"#,
    )
    .unwrap();
    let o = thermogauge(&["lz", "--config", "cfg.json", "--out", "a.csv"], dir.path());
    assert_eq!(code(&o), 0);
    let rows = read_csv(&dir.path().join("a.csv")).unwrap();
    assert_eq!(rows.len(), 7);
    assert!((rows[6].g0 - 0.3).abs() < 1e-15);

    let o = thermogauge(
        &["lz", "--config", "cfg.json", "--steps", "3", "--out", "b.csv"],
        dir.path(),
    );
    assert_eq!(code(&o), 0);
    assert_eq!(read_csv(&dir.path().join("b.csv")).unwrap().len(), 3);

    fs::write(dir.path().join("bad.json"), r#"{"stepz": 7}"#).unwrap();
    assert_eq!(code(&thermogauge(&["lz", "--config", "bad.json"], dir.path())), 1);
}

#[test]
fn zero_heat_convention() {
    let dir = tempfile::tempdir().unwrap();
    let o = thermogauge(
        &["lz", "--steps", "5", "--qu-convention", "zero", "--out", "z.csv"],
        dir.path(),
    );
    assert_eq!(code(&o), 0);
    for r in read_csv(&dir.path().join("z.csv")).unwrap() {
        assert_eq!(r.q_u, 0.0);
        assert_eq!(r.q_inv, r.q_c);
    }
    assert_eq!(code(&thermogauge(&["lz", "--qu-convention", "other"], dir.path())), 1);
}
