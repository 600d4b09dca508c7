use std::path::PathBuf;
use std::process::{Command, Output};

fn fixture(name: &str) -> String {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures");
    root.join(name).to_string_lossy().into_owned()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_taskdecomp"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn passive_failure_keeps_decomposability() {
    let o = run(&["check-failure", &fixture("ex1.scn")]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("remains decomposable"));
    for c in ["EF1", "EF2", "EF3", "EF4"] {
        assert!(text.contains(&format!("{c} holds")), "{c} in {text}");
    }
}

#[test]
fn ef4_violation_prints_its_witness() {
    let o = run(&["check-failure", &fixture("ex5.scn")]);
    assert_eq!(o.status.code(), Some(1));
    let text = stdout(&o);
    assert!(text.contains("EF4 violated"));
    assert!(
        text.contains("agent #1") && text.contains("t = \"a\""),
        "{text}"
    );
}

#[test]
fn self_bisimilarity() {
    let a = format!("{}#spec", fixture("ex1.scn"));
    assert_eq!(run(&["bisim", &a, &a]).status.code(), Some(0));
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(run(&[]).status.code(), Some(2));
}

#[test]
fn missing_file_is_an_input_error() {
    assert_eq!(
        run(&["check-decomp", "/nonexistent.scn"]).status.code(),
        Some(2)
    );
}

#[test]
fn invalid_channel_reports_location() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.scn");
    let text = "automaton s {\n  initial: q0\n  q0 a q1\n}\ntask: s\nagents {\n  1: a\n  2: a\n}\nchannels {\n  a: 1 -> 3\n}\n";
    std::fs::write(&path, text).unwrap();
    let o = run(&["check-decomp", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(
        err.contains("11:3") && err.contains("invalid channel"),
        "{err}"
    );
}

#[test]
fn json_report_is_structured() {
    let o = run(&["--json", "check-decomp", &fixture("ex1.scn")]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["conditions"].as_array().unwrap().len(), 4);
    assert_eq!(v["oracle"]["holds"], true);
}

#[test]
fn bounded_depth_is_reported() {
    let o = run(&["check-failure", &fixture("ex2.scn"), "--depth", "8"]);
    assert!(stdout(&o).contains("EF3 holds (bounded, depth 8)"));
}

#[test]
fn fixture_matrix_passes() {
    let o = run(&["--fixture-matrix"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
}

#[test]
fn generated_scenario_round_trips_through_the_cli() {
    let o = run(&["gen", "--seed", "7", "--agents", "3"]);
    assert_eq!(o.status.code(), Some(0));
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("gen.scn");
    std::fs::write(&path, &o.stdout).unwrap();
    let code = run(&["check-decomp", path.to_str().unwrap()]).status.code();
    assert!(matches!(code, Some(0) | Some(1)));
    let again = run(&["gen", "--seed", "7", "--agents", "3"]);
    assert_eq!(o.stdout, again.stdout);
}

#[test]
fn dot_export_is_stable() {
    let a = format!("{}#spec", fixture("ex1.scn"));
    let first = run(&["export-dot", &a]);
    assert_eq!(first.status.code(), Some(0));
    assert!(stdout(&first).starts_with("digraph \"spec\""));
    assert_eq!(first.stdout, run(&["export-dot", &a]).stdout);
}

#[test]
fn projection_and_composition() {
    let spec = fixture("ex1.scn");
    let o = run(&["project", &spec, "--agent", "3"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("alphabet: a"));
    let a = format!("{spec}#spec");
    assert_eq!(run(&["compose", &a, &a]).status.code(), Some(0));
}

#[test]
fn closed_loop_verification() {
    assert_eq!(run(&["verify", &fixture("ex6.scn")]).status.code(), Some(0));
}

#[test]
fn fuzz_writes_disagreements_to_the_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    let o = run(&[
        "fuzz",
        "--trials",
        "50",
        "--corpus",
        corpus.to_str().unwrap(),
    ]);
    let written = std::fs::read_dir(&corpus).unwrap().count();
    match o.status.code() {
        Some(0) => assert_eq!(written, 0),
        Some(1) => assert!(written > 0),
        other => panic!("unexpected exit {other:?}"),
    }
}
