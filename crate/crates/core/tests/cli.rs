use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Output, Stdio};

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_conflictlens"));
    cmd.env_remove("CONFLICTLENS_LOG");
    cmd
}

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(format!("{name}.cfl"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", stdout(o)))
}

#[test]
fn exit_codes_follow_the_verdict() {
    let cases = [("highway_ex3", 0, "no-conflict"), ("highway_ex4", 1, "resolved-at(C1)"), ("highway_ex5", 1, "resolved-at(C2)")];
    for (name, code, verdict) in cases {
        let path = fixture(name);
        let o = run(&["resolve", path.to_str().unwrap(), "--output", "json"]);
        assert_eq!(o.status.code(), Some(code), "{name}: {}", String::from_utf8_lossy(&o.stderr));
        assert_eq!(json(&o)["verdict"], verdict);
    }
}

#[test]
fn capped_levels_exit_unresolved() {
    let o = run(&["resolve", fixture("highway_ex6").to_str().unwrap(), "--max-level", "C2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("unresolved"));
}

#[test]
fn analyze_only_detects() {
    let o = run(&["analyze", fixture("highway_ex4").to_str().unwrap(), "--output", "json"]);
    assert_eq!(o.status.code(), Some(2));
    let v = json(&o);
    assert_eq!(v["trace"].as_array().unwrap().len(), 1);
    assert!(!v["causes"].as_array().unwrap().is_empty());
}

#[test]
fn bundled_scenarios_are_found_by_name() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin().current_dir(dir.path()).args(["resolve", "highway_ex7.cfl", "--output", "json"]).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    let goals: Vec<String> = serde_json::from_value(json(&o)["negotiated_goals"].clone()).unwrap();
    assert_eq!(goals, ["phi_A_col", "phi_B_col", "phi_B_fast"]);
}

#[test]
fn explain_prints_the_chain() {
    let o = run(&["explain", fixture("highway_ex4").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let text = stdout(&o);
    assert!(text.contains("lidar") && text.contains("C1"), "{text}");

    let o = run(&["explain", fixture("highway_ex4").to_str().unwrap(), "--output", "json"]);
    let v = json(&o);
    assert!(v["chain"].as_array().unwrap().iter().any(|l| l["discharged"] == "C1"));
}

#[test]
fn output_is_identical_across_seeds_and_jobs() {
    let path = fixture("highway_ex4");
    let p = path.to_str().unwrap();
    let base = run(&["resolve", p, "--output", "json"]);
    for extra in [&["--seed", "9"][..], &["--jobs", "1"], &["--jobs", "3", "--seed", "123"]] {
        let mut args = vec!["resolve", p, "--output", "json"];
        args.extend_from_slice(extra);
        let o = run(&args);
        assert_eq!(o.stdout, base.stdout, "{extra:?}");
    }
}

#[test]
fn bad_input_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let broken = dir.path().join("broken.cfl");
    std::fs::write(&broken, "HORIZON 2\nVARS\n  x : 0..1\nGOALS_A\n  g : G<=5 y = 1\n").unwrap();
    for args in [
        vec!["resolve", broken.to_str().unwrap()],
        vec!["resolve", "/no/such/file.cfl"],
        vec!["resolve", fixture("highway_ex3").to_str().unwrap(), "--max-level", "C9"],
        vec!["resolve", fixture("highway_ex3").to_str().unwrap(), "--strategy-bound", "0"],
        vec!["frobnicate"],
    ] {
        let o = run(&args);
        assert_eq!(o.status.code(), Some(3), "{args:?}");
        assert!(!o.stderr.is_empty());
    }
    let o = run(&["resolve", broken.to_str().unwrap()]);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("conflictlens:"), "{err}");
}

#[test]
fn horizon_override_applies() {
    let o = run(&["resolve", fixture("highway_ex7").to_str().unwrap(), "--horizon", "3", "--output", "json"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(json(&o)["verdict"], "resolved-at(C4)");
    let o = run(&["resolve", fixture("highway_ex3").to_str().unwrap(), "--horizon", "2"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn solve_reads_dimacs() {
    let dir = tempfile::tempdir().unwrap();
    let sat = dir.path().join("sat.cnf");
    std::fs::write(&sat, "c two clauses\np cnf 3 2\n1 -2 0\n2 3 0\n").unwrap();
    let o = run(&["solve", sat.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(10));
    let text = stdout(&o);
    assert!(text.starts_with("s SATISFIABLE\n"));
    let lits: Vec<i32> = text
        .lines()
        .filter_map(|l| l.strip_prefix("v "))
        .flat_map(|l| l.split_whitespace().map(|x| x.parse::<i32>().unwrap()))
        .collect();
    assert_eq!(lits.last(), Some(&0));
    let val = |v: i32| lits.contains(&v);
    assert!((val(1) || val(-2)) && (val(2) || val(3)));

    let mut child = bin().args(["solve", "-"]).stdin(Stdio::piped()).stdout(Stdio::piped()).spawn().unwrap();
    child.stdin.take().unwrap().write_all(b"p cnf 1 2\n1 0\n-1 0\n").unwrap();
    let o = child.wait_with_output().unwrap();
    assert_eq!(o.status.code(), Some(20));
    assert_eq!(stdout(&o), "s UNSATISFIABLE\n");

    let bad = dir.path().join("bad.cnf");
    std::fs::write(&bad, "p cnf 1 1\n1 x 0\n").unwrap();
    assert_eq!(run(&["solve", bad.to_str().unwrap()]).status.code(), Some(3));
}

#[test]
fn help_and_version_succeed() {
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["--version"]).status.code(), Some(0));
}
