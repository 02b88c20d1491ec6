//! End-to-end runs of the rlab binary.

use std::io::Write;
use std::process::{Command, Output};

fn rlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rlab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn jt_norm_on_vector_file() {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    writeln!(f, "universe dyadic 2").unwrap();
    writeln!(f, "1:1 1").unwrap();
    writeln!(f, "1:2 1").unwrap();
    let out = rlab(&["jt-norm", f.path().to_str().unwrap()]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("norm_sq=2"));
    assert!(text.contains("oracle-agreement pass"));
}

#[test]
fn jt_norm_parse_error_names_line() {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    writeln!(f, "universe dyadic 2").unwrap();
    writeln!(f, "garbage").unwrap();
    let out = rlab(&["jt-norm", f.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("line 2"), "stderr was: {err}");
}

#[test]
fn verify_jt_roundtrips_and_exits_zero() {
    let out = rlab(&["verify", "jt", "--N", "4"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let report = riemann_lab::report::parse_report(&text).unwrap();
    assert!(report.all_pass());
    assert!(text.contains(riemann_lab::report::LIMITATION_LINE));
}

#[test]
fn verify_unknown_construction_fails() {
    let out = rlab(&["verify", "nonesuch"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_csv_format() {
    let out = rlab(&["verify", "jt", "--N", "3", "--format", "csv"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.starts_with("name,verdict,values"));
    assert!(text.contains("worstcase-bound,pass"));
}

#[test]
fn plotdata_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("jt.csv");
    let out = rlab(&["plotdata", "jt", "--sweep", "1..3", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.trim_end().lines().collect();
    assert_eq!(lines[0], "param,name,decimal,rational");
    assert_eq!(lines.len(), 7); // header + 2 rows per N

    let out = rlab(&["plotdata", "jt", "--sweep", ""]);
    assert!(out.status.success());
    assert_eq!(stdout(&out).trim_end(), "param,name,decimal,rational");
}

#[test]
fn verify_kadets_with_seeded_random_partitions() {
    let out = rlab(&[
        "verify", "kadets", "--partitions", "uniform:4..32,random:3", "--seed", "7",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert_eq!(text.matches("check lowerbound-").count(), 7); // 4,8,16,32 + 3 random
    // same seed reproduces the same report body
    let again = rlab(&[
        "verify", "kadets", "--partitions", "uniform:4..32,random:3", "--seed", "7",
    ]);
    let strip = |t: &str| {
        t.lines()
            .filter(|l| !l.starts_with("elapsed_ms"))
            .collect::<Vec<_>>()
            .join("\n")
    };
    assert_eq!(strip(&text), strip(&stdout(&again)));
}
