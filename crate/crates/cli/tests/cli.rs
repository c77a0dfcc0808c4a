use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use stigmergy::harness::{monitor_suite, read_trace, Verdict};
use stigmergy::scenario::Summary;

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)
}

fn out_dir(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join(name);
    let _ = fs::remove_dir_all(&dir);
    dir
}

fn stigmergy(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stigmergy")).args(args).output().unwrap()
}

fn run(scenario: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![scenario.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    stigmergy(&args)
}

fn write_scenario(name: &str, text: &str) -> PathBuf {
    let path = Path::new(env!("CARGO_TARGET_TMPDIR")).join(name);
    fs::write(&path, text).unwrap();
    path
}

fn summary(dir: &Path) -> Summary {
    serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

#[test]
fn bundled_scenarios_pass() {
    for name in ["sync2.toml", "sync_n.toml", "async2.toml", "async_n.toml"] {
        let out = out_dir(&format!("bundled-{name}"));
        let status = run(&scenario(name), &out, &["--quiet"]);
        assert_eq!(status.status.code(), Some(0), "{name}: {}", String::from_utf8_lossy(&status.stdout));
        assert!(status.stdout.is_empty());
        let s = summary(&out);
        assert_eq!(s.messages_delivered, s.messages, "{name}");
        assert_eq!(s.bits_delivered, s.bits_queued, "{name}");
    }
}

#[test]
fn sync2_uses_two_instants_per_bit() {
    let out = out_dir("sync2-steps");
    assert_eq!(run(&scenario("sync2.toml"), &out, &[]).status.code(), Some(0));
    let s = summary(&out);
    // The longer message has twelve bits.
    assert_eq!(s.last_delivery, Some(2 * 12 - 1));
    assert_eq!(s.steps_used, 2 * 12);
}

#[test]
fn duplicate_positions_are_named() {
    let path = write_scenario(
        "duplicate.toml",
        r#"
format_version = 1
protocol = "sync_n_sod"
horizon = 10
[schedule]
kind = "synchronous"
[[robots]]
position = [0.0, 0.0]
sigma = 1.0
[[robots]]
position = [3.0, 0.0]
sigma = 1.0
[[robots]]
position = [0.0, 0.0]
sigma = 1.0
"#,
    );
    let out = run(&path, &out_dir("duplicate"), &[]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("robots 0 and 2"), "{err}");
}

#[test]
fn violated_assumptions_exit_2() {
    let three = write_scenario(
        "three_for_sync2.toml",
        r#"
format_version = 1
protocol = "sync2"
horizon = 10
[schedule]
kind = "synchronous"
[[robots]]
position = [0.0, 0.0]
sigma = 1.0
[[robots]]
position = [3.0, 0.0]
sigma = 1.0
[[robots]]
position = [0.0, 4.0]
sigma = 1.0
"#,
    );
    let out = run(&three, &out_dir("three"), &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("sync2 needs"));

    let ids = write_scenario(
        "no_ids.toml",
        r#"
format_version = 1
protocol = "sync_n_id"
horizon = 10
[schedule]
kind = "synchronous"
[[robots]]
position = [0.0, 0.0]
sigma = 1.0
[[robots]]
position = [3.0, 0.0]
sigma = 1.0
"#,
    );
    let out = run(&ids, &out_dir("no-ids"), &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("visible_id"));

    assert_eq!(stigmergy(&[]).status.code(), Some(2));
    assert_eq!(stigmergy(&["--horizon", "x", "a.toml"]).status.code(), Some(2));
}

#[test]
fn other_seeds_still_pass() {
    let mut traces = Vec::new();
    for seed in ["1", "2", "3", "4"] {
        let out = out_dir(&format!("seed-{seed}"));
        let status = run(&scenario("async2.toml"), &out, &["--seed", seed, "--horizon", "1500", "--quiet"]);
        assert_eq!(status.status.code(), Some(0), "seed {seed}");
        traces.push(fs::read(out.join("trace.jsonl")).unwrap());
    }
    for i in 1..traces.len() {
        assert_ne!(traces[0], traces[i]);
    }
}

#[test]
fn reruns_are_byte_identical() {
    for name in ["sync_n.toml", "async_n.toml"] {
        let a = out_dir(&format!("rerun-a-{name}"));
        let b = out_dir(&format!("rerun-b-{name}"));
        assert_eq!(run(&scenario(name), &a, &["--quiet"]).status.code(), Some(0));
        assert_eq!(run(&scenario(name), &b, &["--quiet"]).status.code(), Some(0));
        for file in ["trace.jsonl", "verdicts.json", "summary.json"] {
            assert_eq!(fs::read(a.join(file)).unwrap(), fs::read(b.join(file)).unwrap(), "{name} {file}");
        }
    }
}

#[test]
fn trace_file_reproduces_the_verdicts() {
    for name in ["sync2.toml", "async_n.toml"] {
        let out = out_dir(&format!("replay-{name}"));
        assert_eq!(run(&scenario(name), &out, &["--quiet"]).status.code(), Some(0));
        let trace = read_trace(BufReader::new(fs::File::open(out.join("trace.jsonl")).unwrap())).unwrap();
        let written: Vec<Verdict> = serde_json::from_str(&fs::read_to_string(out.join("verdicts.json")).unwrap()).unwrap();
        assert_eq!(monitor_suite(&trace), written, "{name}");
    }
}

#[test]
fn explore_writes_a_report() {
    let out = out_dir("explore");
    let status = run(&scenario("async2_explore.toml"), &out, &["--explore", "--horizon", "6"]);
    assert_eq!(status.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("explore.json")).unwrap()).unwrap();
    assert_eq!(report["total"], 729);
    assert_eq!(report["exhaustive"], true);
}

#[test]
fn exhausted_budget_is_a_violation() {
    let text = "explore_budget = 10\n".to_string() + &fs::read_to_string(scenario("async2_explore.toml")).unwrap();
    let path = write_scenario("budget.toml", &text);
    let out = run(&path, &out_dir("budget"), &["--explore"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("partial"));
}
