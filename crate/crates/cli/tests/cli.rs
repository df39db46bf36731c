//! End-to-end tests of the command-line interface: exit codes, output
//! shape, and byte-level determinism of the JSON reports.

use std::path::PathBuf;
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn pgraph(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pgraph"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).to_string()
}

#[test]
fn validate_clean_graph_exits_zero() {
    let out = pgraph(&["validate", fixture("grid3.pg").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("0 violations"));
}

#[test]
fn mce_prints_the_singleton() {
    let out = pgraph(&[
        "mce",
        fixture("grid3.pg").to_str().unwrap(),
        "--pair",
        "h0_0",
        "v0_0",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("MCE(h0_0, v0_0) = {h0_0.v1_0}"), "{text}");
}

#[test]
fn gaps_suite_on_the_maximal_basis_passes() {
    let out = pgraph(&[
        "check",
        fixture("grid3.pg").to_str().unwrap(),
        "--suite",
        "gaps",
        "--flavor",
        "omega",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("0 failed"));
}

#[test]
fn spielberg_suite_flags_the_marks() {
    let out = pgraph(&[
        "check",
        fixture("hyb1.pg").to_str().unwrap(),
        "--suite",
        "spielberg",
        "--flavor",
        "omega",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("finite-receiver"), "{text}");
    assert!(text.contains("0 failed"), "{text}");
}

#[test]
fn filters_lists_ultrafilters() {
    let out = pgraph(&[
        "filters",
        fixture("interval4.pg").to_str().unwrap(),
        "--ultra",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("5 filters"), "{text}");
    assert!(text.lines().filter(|l| l.starts_with("ultra")).count() == 5);
}

#[test]
fn report_json_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for (path, _) in [(&a, 0), (&b, 1)] {
        let out = pgraph(&[
            "report",
            fixture("bouquet2.pg").to_str().unwrap(),
            "--format",
            "json",
            "--seed",
            "7",
            "--out",
            path.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0));
    }
    let bytes_a = std::fs::read(&a).unwrap();
    let bytes_b = std::fs::read(&b).unwrap();
    assert!(!bytes_a.is_empty());
    assert_eq!(bytes_a, bytes_b, "reports must be reproducible");
    // Schema-stable keys.
    let parsed: serde_json::Value = serde_json::from_slice(&bytes_a).unwrap();
    let first = &parsed.as_array().unwrap()[1];
    let obj = first.as_object().unwrap();
    for key in ["suite", "graph_hash", "checks", "seed"] {
        assert!(obj.contains_key(key), "missing key {key}");
    }
    assert!(!obj.contains_key("elapsed_ms"));
}

#[test]
fn parse_errors_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.pg");
    std::fs::write(&bad, "group nk 2\nvertex v\nedge e v v x9\n").unwrap();
    let out = pgraph(&["validate", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));

    // A dropped square is reported as incomplete, also exit 3.
    let text = std::fs::read_to_string(fixture("grid3.pg")).unwrap();
    let cut = text.rfind("square").unwrap();
    let truncated = dir.path().join("missing-square.pg");
    std::fs::write(&truncated, &text[..cut]).unwrap();
    let out = pgraph(&["validate", truncated.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("incomplete squares"));
}

#[test]
fn bad_flags_exit_two() {
    let out = pgraph(&["check", "nonexistent.pg", "--suite", "nonsense"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn cap_exceeded_exits_four() {
    let out = pgraph(&[
        "filters",
        fixture("grid3.pg").to_str().unwrap(),
        "--cap",
        "2",
    ]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn bound_override_changes_the_graph() {
    let out = pgraph(&[
        "filters",
        fixture("bouquet2.pg").to_str().unwrap(),
        "--bound",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(0));
    // Words of length <= 1 over two letters: e, a, b.
    assert!(stdout(&out).contains("3 filters"));
}
