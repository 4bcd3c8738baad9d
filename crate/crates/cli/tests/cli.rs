use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn qmetro(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qmetro"))
        .args(args)
        .env("QMETRO_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    let mut all = vec!["--outdir", dir.to_str().unwrap()];
    all.extend_from_slice(args);
    let out = qmetro(&all);
    assert!(
        out.status.success(),
        "qmetro {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect();
    (header, rows)
}

#[test]
fn bounds_table() {
    let dir = tempfile::tempdir().unwrap();
    run_in(dir.path(), &["bounds", "--m", "10"]);
    let (header, rows) = read_csv(&dir.path().join("bounds.csv"));
    assert_eq!(header[0], "M");
    assert_eq!(rows.len(), 9);
    assert_eq!(rows[0][0], 2.0);
    assert!((rows[0][1] - 8.0).abs() < 1e-12);
    assert!(dir.path().join("bounds.svg").exists());
    assert!(dir.path().join("bounds.json").exists());
}

#[test]
fn fig3_closed_form_columns() {
    let dir = tempfile::tempdir().unwrap();
    run_in(dir.path(), &["fig3", "--m", "2000", "--nmax", "1000", "--points", "20"]);
    let (header, rows) = read_csv(&dir.path().join("fig3.csv"));
    assert_eq!(header, vec!["N", "g_M2000"]);
    assert!(rows.len() >= 10);
    for r in &rows {
        assert!(r[1] > 0.0 && r[1] <= r[0] + 1e-9);
    }
}

#[test]
fn fig2_small_run() {
    let dir = tempfile::tempdir().unwrap();
    run_in(dir.path(), &["--restarts", "4", "fig2", "--p", "0.9", "--mmax", "2"]);
    let (header, rows) = read_csv(&dir.path().join("fig2.csv"));
    assert_eq!(header.first().unwrap(), "M");
    assert_eq!(header.last().unwrap(), "F_sep");
    assert_eq!(rows.len(), 2);
    let fq = header.iter().position(|h| h == "F_Q_p0.9").unwrap();
    let var = header.iter().position(|h| h == "4Var_p0.9").unwrap();
    for r in &rows {
        assert!(r[fq] <= r[var] + 1e-8);
    }
}

#[test]
fn scan_is_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = [
        "--restarts",
        "4",
        "--seed",
        "3",
        "scan",
        "--state",
        "noisy_ghz_white",
        "--param",
        "p=0.5:1:0.25",
    ];
    run_in(a.path(), &args);
    run_in(b.path(), &args);
    let ca = fs::read(a.path().join("scan.csv")).unwrap();
    let cb = fs::read(b.path().join("scan.csv")).unwrap();
    assert_eq!(ca, cb);
    let (_, rows) = read_csv(&a.path().join("scan.csv"));
    assert_eq!(rows.len(), 3);
    // pure GHZ at p = 1
    assert!((rows[2][1] - 3.0).abs() < 1e-4);
}

#[test]
fn invalid_arguments_fail() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    for args in [
        vec!["--outdir", d, "scan", "--state", "no_such_state"],
        vec!["--outdir", d, "scan", "--state", "isotropic", "--param", "q=0:1:0.1"],
        vec!["--outdir", d, "fig2", "--p", "abc"],
        vec!["--outdir", d, "bounds", "--m", "-3"],
        vec!["nonexistent-subcommand"],
    ] {
        let out = qmetro(&args);
        assert!(!out.status.success(), "{args:?} should fail");
    }
    let missing = dir.path().join("none.json");
    let out = qmetro(&["--outdir", d, "--config", missing.to_str().unwrap(), "bounds"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn plot_rerenders_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("t.csv");
    fs::write(&csv, "p,a,b\n0,1,NaN\n0.5,2,1.5\n1,3,2\n").unwrap();
    let out = dir.path().join("t.svg");
    qmetro(&["plot", csv.to_str().unwrap(), "--x", "p", "--y", "a,b", "--out", out.to_str().unwrap()]);
    let svg = fs::read_to_string(&out).unwrap();
    assert!(svg.starts_with("<svg"));
    assert_eq!(svg.matches("<polyline").count(), 2);
    let bad = qmetro(&["plot", csv.to_str().unwrap(), "--x", "zz"]);
    assert!(!bad.status.success());
}
