use std::path::Path;
use std::process::{Command, Output};

fn gaussrd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gaussrd"))
        .args(args)
        .output()
        .expect("spawn gaussrd")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

fn column(csv: &str, name: &str) -> usize {
    csv.lines().next().unwrap().split(',').position(|h| h == name).unwrap()
}

#[test]
fn rdf_two_type_instance() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(
        dir.path(),
        "a.json",
        r#"{"n": 3, "rho0": 0.2, "rho1": 0.3, "e": [0.5, 0.5, 0.3]}"#,
    );
    let out = gaussrd(&["rdf", &path]);
    assert!(out.status.success());
    assert_eq!(
        stdout(&out).lines().next().unwrap(),
        "rate_bits=1.7218 sdc=satisfied gap=0"
    );
}

#[test]
fn rdf_violated_instance() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(
        dir.path(),
        "b.json",
        r#"{"matrix": [[1, 0.8], [0.8, 1]], "e": [0.5, 0.5]}"#,
    );
    let out = gaussrd(&["rdf", &path]);
    assert!(out.status.success());
    assert_eq!(
        stdout(&out).lines().next().unwrap(),
        "rate_bits=0.5850 sdc=violated recon_rank=1"
    );
}

#[test]
fn rdf_writes_d_star() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(
        dir.path(),
        "b.json",
        r#"{"matrix": [[1, 0.8], [0.8, 1]], "e": [0.5, 0.5]}"#,
    );
    let out_dir = dir.path().join("out");
    let out = gaussrd(&["--out", out_dir.to_str().unwrap(), "rdf", &path]);
    assert!(out.status.success());
    let d = std::fs::read_to_string(out_dir.join("d_star.csv")).unwrap();
    assert_eq!(d.lines().count(), 3);
}

#[test]
fn nats_flag_changes_unit() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(
        dir.path(),
        "b.json",
        r#"{"matrix": [[1, 0.8], [0.8, 1]], "e": [0.5, 0.5]}"#,
    );
    let out = gaussrd(&["--nats", "rdf", &path]);
    assert!(stdout(&out).starts_with("rate_nats=0.4055 "));
}

#[test]
fn malformed_input_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = [
        "{not json",
        r#"{"n": 3, "rho0": 0.2, "e": [0.5, 0.5, 0.3]}"#,
        r#"{"matrix": [[1, 0.8], [0.8, 1]], "e": [0.5, 0.5, 0.5]}"#,
        r#"{"matrix": [[1, 0.8], [0.8, 1]], "e": [0.5, 0.5], "extra": 1}"#,
        r#"{"matrix": [[1, 2], [2, 1]], "e": [0.5, 0.5]}"#,
    ];
    for (i, text) in bad.iter().enumerate() {
        let path = write(dir.path(), &format!("bad{i}.json"), text);
        let out = gaussrd(&["rdf", &path]);
        assert_eq!(out.status.code(), Some(1), "case {i}: {text}");
        assert!(!out.stderr.is_empty());
    }
    assert_eq!(gaussrd(&["rdf", "/nonexistent/instance.json"]).status.code(), Some(1));
    assert_eq!(gaussrd(&["no-such-command"]).status.code(), Some(1));
}

#[test]
fn newton_budget_exhaustion_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(
        dir.path(),
        "b.json",
        r#"{"matrix": [[1, 0.8], [0.8, 1]], "e": [0.5, 0.5]}"#,
    );
    let out = gaussrd(&["rdf", "--max-newton", "1", &path]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn every_subcommand_has_help() {
    for cmd in ["rdf", "sdc", "rho0m", "mc-sdc", "figures"] {
        let out = gaussrd(&[cmd, "--help"]);
        assert!(out.status.success(), "{cmd}");
        assert!(stdout(&out).contains("Usage"), "{cmd}");
    }
    assert!(gaussrd(&["--help"]).status.success());
}

#[test]
fn sdc_reports_verdict() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(
        dir.path(),
        "a.json",
        r#"{"n": 3, "rho0": 0.2, "rho1": 0.3, "e": [0.5, 0.5, 0.3]}"#,
    );
    let out = gaussrd(&["sdc", &path]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("satisfied"));
}

#[test]
fn figure1_reduction_at_80() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    assert!(gaussrd(&["--out", d, "figures", "1"]).status.success());
    let csv = std::fs::read_to_string(dir.path().join("fig1.csv")).unwrap();
    let (n, rho, red) = (column(&csv, "n"), column(&csv, "rho"), column(&csv, "reduction_pct"));
    let row = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').collect::<Vec<_>>())
        .find(|f| f[n] == "80" && f[rho].parse::<f64>() == Ok(0.2))
        .unwrap();
    let pct: f64 = row[red].parse().unwrap();
    assert!((pct - 13.5).abs() <= 0.2, "{pct}");
    assert!((pct - 13.3514).abs() < 1e-3, "{pct}");
    assert!(dir.path().join("fig1.svg").exists());
}

#[test]
fn figure3_rows_are_bracketed() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    assert!(gaussrd(&["--out", d, "figures", "3", "--draws", "200"])
        .status
        .success());
    let csv = std::fs::read_to_string(dir.path().join("fig3.csv")).unwrap();
    let viol = column(&csv, "bracket_violations");
    let (lo, mean, hi) = (
        column(&csv, "lower_sharp_mean"),
        column(&csv, "rho0m_mean"),
        column(&csv, "upper_concise_mean"),
    );
    for line in csv.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        assert_eq!(f[viol], "0", "{line}");
        let v = |i: usize| f[i].parse::<f64>().unwrap();
        assert!(v(lo) <= v(mean) + 1e-10 && v(mean) <= v(hi) + 1e-10, "{line}");
    }
}

#[test]
fn figure2_is_reproducible() {
    let run = || {
        let dir = tempfile::tempdir().unwrap();
        let d = dir.path().to_str().unwrap();
        let args = [
            "--seed", "7", "--out", d, "figures", "2", "--trials", "2000", "--max-n", "6",
        ];
        assert!(gaussrd(&args).status.success());
        std::fs::read(dir.path().join("fig2.csv")).unwrap()
    };
    let a = run();
    assert!(!a.is_empty());
    assert_eq!(a, run());
}

#[test]
fn mc_sdc_two_components() {
    let out = gaussrd(&[
        "mc-sdc", "--n-list", "2", "--rho0", "0.0", "--rho1", "0.45", "--trials", "20000",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    let p = header.split(',').position(|h| h == "p_hat").unwrap();
    let p_hat: f64 = lines.next().unwrap().split(',').nth(p).unwrap().parse().unwrap();
    assert!((p_hat - 0.4741).abs() < 0.02, "{p_hat}");
}
