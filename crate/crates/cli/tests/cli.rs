use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/fixtures")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_medsched"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn solve_scenario_one() {
    let path = fixture("scenario1_completed.lp");
    let o = run(&["solve", "-i", path.to_str().unwrap(), "--explain"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("% status: optimal, objective: 150000"));
    assert!(out.contains("150000 + 0 + 0 - 0 - 0 - 0 = 150000"));
    assert!(out.ends_with("appointment(p1, c3, m1, v1, 1727308800).\n"));
}

#[test]
fn solve_json_with_baseline() {
    let path = fixture("scenario3_completed.lp");
    let o = run(&[
        "solve",
        "-i",
        path.to_str().unwrap(),
        "--json",
        "--baseline",
        "--mode",
        "strict",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["result"]["status"], "optimal");
    assert_eq!(v["result"]["objective"], 866_000);
    // first-available gives p3 the 14:00 slot that p4 must precede
    assert_eq!(v["baseline"]["status"], "infeasible");
}

#[test]
fn infeasible_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("inf.lp");
    std::fs::write(
        &path,
        "patient(p1, \"A\", \"B\"). disabled(p1). clinic(c1, \"X\"). distance(p1, c1, 1).\n\
         doctor(m1, \"D\", \"E\", 40, \"Rome\", \"GP\"). visit_type(v1, \"S\", \"d\", 0, 0, 0).\n\
         need(p1, v1, 1). availability(c1, m1, v1, 1727308800).\n",
    )
    .unwrap();
    let p = path.to_str().unwrap();
    assert_eq!(run(&["solve", "-i", p]).status.code(), Some(2));
    assert_eq!(run(&["oracle", "-i", p]).status.code(), Some(2));
}

#[test]
fn invalid_input_exits_three() {
    let strict = fixture("scenario1.lp");
    let o = run(&["solve", "-i", strict.to_str().unwrap(), "--parse", "strict"]);
    assert_eq!(o.status.code(), Some(3));
    // lenient parsing succeeds but the elided clinic leaves dangling references
    let o = run(&["solve", "-i", strict.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown-clinic"));
    assert_eq!(run(&["solve", "-i", "/nonexistent.lp"]).status.code(), Some(3));
    assert_eq!(run(&["solve", "--bogus"]).status.code(), Some(3));
    let ok = fixture("scenario1_completed.lp");
    assert_eq!(
        run(&["solve", "-i", ok.to_str().unwrap(), "--time-budget", "0"])
            .status
            .code(),
        Some(3)
    );
}

#[test]
fn oracle_lists_all_optima() {
    let path = fixture("scenario3_completed.lp");
    let o = run(&["oracle", "-i", path.to_str().unwrap(), "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["optimum"], 866_000);
    // p2/p4 and p3/p5 may swap within their urgency tiers
    assert_eq!(v["optimal"].as_array().unwrap().len(), 4);
    let o = run(&["oracle", "-i", path.to_str().unwrap(), "--cap", "10"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("instance-too-large"));
}

#[test]
fn validate_reports_violations() {
    let dir = tempfile::tempdir().unwrap();
    let sched = dir.path().join("s.lp");
    std::fs::write(&sched, "appointment(p1, c4, m1, v1, 1727481600).\n").unwrap();
    let inst = fixture("scenario1_completed.lp");
    let o = run(&[
        "validate",
        "-i",
        inst.to_str().unwrap(),
        "--schedule",
        sched.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["valid"], true);
    assert_eq!(v["violations"][0]["code"], "accessibility");

    let listing = fixture("scenario2.lp");
    let o = run(&["validate", "-i", listing.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["valid"], false);
}

#[test]
fn generate_is_deterministic_and_solvable() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let args = [
        "generate",
        "--seed",
        "7",
        "--patients",
        "6",
        "--clinics",
        "3",
        "--slots",
        "60",
        "--format",
        "json",
    ];
    let o = run(&[&args[..], &["-o", a.to_str().unwrap()]].concat());
    assert_eq!(o.status.code(), Some(0));
    let again = run(&args);
    assert_eq!(std::fs::read_to_string(&a).unwrap(), stdout(&again));
    let o = run(&["solve", "-i", a.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));

    let facts = run(&[
        "generate",
        "--profile",
        "minimal",
        "--patients",
        "1",
        "--clinics",
        "1",
        "--slots",
        "1",
    ]);
    assert!(stdout(&facts).contains("availability("));
    let knobs = run(&[
        "generate",
        "--budget-tightness",
        "none",
        "--contention",
        "0.5",
        "--urgency-weights",
        "0,0,1",
    ]);
    assert_eq!(
        knobs.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&knobs.stderr)
    );
    assert!(!stdout(&knobs).contains("budget("));
}
