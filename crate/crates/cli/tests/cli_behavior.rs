//! Exit codes and output shapes of the command-line front end.

use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_silvertree"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

#[test]
fn tree_stem() {
    let out = run(&["tree", "0*1", "--stem"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out), "0\n");
}

#[test]
fn tree_action_prints_canonical_pattern() {
    let out = run(&["tree", "0*", "--act", "1"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out), "1\n");
}

#[test]
fn tree_restriction_outside_is_a_domain_error() {
    let out = run(&["tree", "0*", "--restrict", "10"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn tree_bad_pattern_is_a_usage_error() {
    let out = run(&["tree", "0x1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn tree_dot_output() {
    let out = run(&["tree", "01", "--truncate", "3", "--format", "dot"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.starts_with("digraph"));
    assert!(text.contains("fillcolor=lightgrey"));
}

#[test]
fn system_validation_report() {
    let out = run(&[
        "system",
        "--seed-tree",
        "0*",
        "--extend",
        "1",
        "--validate",
        "--union-top",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("node \"0\" \"00\""));
    assert!(text.contains("union-top \"0\""));
    assert!(text.contains("layer-translates: ok"));
}

#[test]
fn unknown_suite_is_a_usage_error() {
    let out = run(&["verify", "unknown"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    let out = run(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_a_small_suite() {
    let out = run(&["verify", "sym", "--cases", "25", "--seed", "3"]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("suite sym: PASS"));
}

#[test]
fn verify_cover_override() {
    let out = run(&["verify", "uu3", "--cover", "0,1", "--depth", "3"]);
    assert!(out.status.success(), "{}", stdout(&out));
    assert!(stdout(&out).contains("suite uu3: PASS"));
}

#[test]
fn name_inspection() {
    let out = run(&["name", "--canonical", "3", "--df-value", "**1:2"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("class 2 1 \"**1\""));
    assert!(text.contains("df-value \"**1\" 2 -> 1"));
}

#[test]
fn generic_rejects_malformed_scripts() {
    let dir = std::env::temp_dir().join(format!("silvertree-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let script = dir.join("bad.req");
    std::fs::write(&script, "frobnicate 12\n").unwrap();
    let out = run(&["generic", script.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn generic_runs_a_script_and_logs_the_table() {
    let dir = std::env::temp_dir().join(format!("silvertree-cli-log-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let script = dir.join("run.req");
    std::fs::write(&script, "depth 3\ntrailing 3\nheight 0\nroot \"01\"\n").unwrap();
    let out = run(&["generic", script.to_str().unwrap()]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("met \"root \"01\"\""));
    assert!(text.contains("tx 1 \"\" \"01\""));
    std::fs::remove_dir_all(&dir).ok();
}
