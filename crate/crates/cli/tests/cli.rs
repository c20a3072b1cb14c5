use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn persmon(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_persmon")).args(args).output().unwrap()
}

fn instances() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../instances")
}

fn stdout_json(o: &Output) -> Value {
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn empty_instance_path_is_a_usage_error() {
    let o = persmon(&["plan-single", "--instance", ""]);
    assert_eq!(o.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["exit_code"], 2);
}

#[test]
fn more_agents_than_targets_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let table = instances().join("table1.json");
    let o = persmon(&["plan-fleet", "--instance", s(&table), "--agents", "6", "--out", s(dir.path())]);
    assert!(!o.status.success());
    assert!(!dir.path().join("partition.json").exists());
}

#[test]
fn single_target_plan_is_trivial() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("one.json");
    assert!(persmon(&["gen", "--out", s(&inst), "--targets", "1", "--seed", "3"]).status.success());
    let out = dir.path().join("plan");
    let v = stdout_json(&persmon(&["plan-single", "--instance", s(&inst), "--out", s(&out)]));
    assert_eq!(v["cycle"].as_array().unwrap().len(), 1);
    assert_eq!(v["active"], 1);
}

#[test]
fn five_target_benchmark_keeps_every_target_active() {
    let dir = tempfile::tempdir().unwrap();
    let table = instances().join("table1.json");
    let v = stdout_json(&persmon(&["plan-single", "--instance", s(&table), "--out", s(dir.path())]));
    assert_eq!(v["active"], 5);
    assert!(v["excluded"].as_array().unwrap().is_empty());
    for f in ["plan.json", "cycle.json", "convergence.csv", "period_search.csv"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
}

#[test]
fn fleet_plan_writes_one_plan_per_agent_and_validates() {
    let dir = tempfile::tempdir().unwrap();
    let inst = instances().join("fleet15.json");
    let v = stdout_json(&persmon(&["plan-fleet", "--instance", s(&inst), "--agents", "3", "--out", s(dir.path())]));
    assert_eq!(v["agents"].as_array().unwrap().len(), 3);
    assert!(dir.path().join("partition.json").exists());
    for k in 1..=3 {
        let plan = dir.path().join(format!("agent_{k}/plan.json"));
        let sim = dir.path().join(format!("sim_{k}"));
        let o = persmon(&[
            "validate", "--instance", s(&inst), "--plan", s(&plan), "--out", s(&sim), "--periods", "4", "--steps", "500",
        ]);
        let r = stdout_json(&o);
        assert_eq!(r["passed"], true);
        assert!(sim.join("trace.csv").exists() && sim.join("validation.json").exists());
    }
}

#[test]
fn same_seed_gives_identical_output() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("g.json");
    assert!(persmon(&["gen", "--out", s(&inst), "--targets", "6", "--seed", "11", "--agents", "2"]).status.success());
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = persmon(&["plan-fleet", "--instance", s(&inst), "--out", s(&out)]);
        assert!(o.status.success());
        (o.stdout, std::fs::read(out.join("partition.json")).unwrap())
    };
    assert_eq!(run("a"), run("b"));
}
