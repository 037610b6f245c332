use std::io::Write;
use std::process::{Command, Output, Stdio};

fn data(name: &str) -> String {
    format!("{}/tests/data/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn xtl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_xtl")).args(args).output().unwrap()
}

fn xtl_stdin(args: &[&str], input: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_xtl"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(input.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap().trim_end().to_string()
}

const FLAT: &str = "doc{a{}lbrace{}b{}lbrace{}rbrace{}c{}lbrace{}a{}lbrace{}rbrace{}b{}lbrace{}rbrace{}rbrace{}c{}lbrace{}rbrace{}rbrace{}}";

#[test]
fn run_flattens_the_example() {
    let o = xtl(&["run", &data("tree2string.xp"), &data("example.dt")]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), FLAT);
}

#[test]
fn empty_program_uses_the_default_rule() {
    let o = xtl(&["run", &data("empty.xp"), &data("leaf.dt")]);
    assert_eq!(stdout(&o), "doc{}");
}

#[test]
fn exit_codes() {
    assert_eq!(xtl(&["run", &data("loop.xp"), &data("leaf.dt"), "--max-steps", "1000"]).status.code(), Some(3));
    assert_eq!(xtl(&["run", &data("example.dt"), &data("leaf.dt")]).status.code(), Some(1));
    assert_eq!(xtl(&["run", &data("missing.xp"), &data("leaf.dt")]).status.code(), Some(1));
    let v2 = xtl(&["gen", "tm", &data("binary_successor.tm")]);
    let o = xtl_stdin(&["run10", "-", &data("leaf.dt")], &stdout(&v2));
    assert_eq!(o.status.code(), Some(4));
    let o = xtl(&["run10", &data("loop.xp"), &data("leaf.dt")]);
    assert_eq!(o.status.code(), Some(5));
    assert!(String::from_utf8_lossy(&o.stderr).contains("loop@0 -> loop@0"));
    assert_eq!(xtl(&["frobnicate"]).status.code(), Some(64));
    let bad = xtl_stdin(&["run", "-", &data("leaf.dt")], "template r match (/*) { vcopy (position()) }");
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("not of type nodes"));
}

#[test]
fn dag_evaluation_matches_the_engine() {
    let o = xtl(&["run10", &data("tree2string.xp"), &data("example.dt"), "--unfold"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), FLAT);
}

#[test]
fn doubling_is_reported_without_unfolding() {
    let o = xtl(&["run10", &data("doubling30.xp"), &data("leaf.dt")]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("unfolded_leaves\t1073741824"));
    let o = xtl(&["run10", &data("doubling30.xp"), &data("leaf.dt"), "--unfold"]);
    assert_eq!(o.status.code(), Some(7));
}

#[test]
fn generated_doubling_through_a_pipe() {
    let p = stdout(&xtl(&["gen", "doubling", "3"]));
    let o = xtl_stdin(&["run10", "-", &data("leaf.dt"), "--unfold"], &p);
    assert_eq!(stdout(&o), format!("doc{{{}}}", "a{}".repeat(8)));
}

#[test]
fn check_prints_the_version() {
    assert_eq!(stdout(&xtl(&["check", &data("string2tree.xp")])), "v1");
    let tm = stdout(&xtl(&["gen", "tm", &data("binary_successor.tm")]));
    assert_eq!(stdout(&xtl_stdin(&["check", "-"], &tm)), "v2");
    let lba = stdout(&xtl(&["gen", "lba", &data("palindrome.tm")]));
    assert_eq!(stdout(&xtl_stdin(&["check", "-"], &lba)), "v1");
}

#[test]
fn fuzz_reports_agreement() {
    let dir = tempfile::tempdir().unwrap();
    let flat = dir.path().join("flat.dt");
    let o = xtl(&["--out", flat.to_str().unwrap(), "run", &data("tree2string.xp"), &data("example.dt")]);
    assert!(o.status.success() && o.stdout.is_empty());
    let o = xtl(&["fuzz", &data("string2tree.xp"), flat.to_str().unwrap(), "--seeds", "20"]);
    assert_eq!(stdout(&o), "confluent: 20/20 isomorphic");
}

#[test]
fn seeded_runs_are_reproducible() {
    let args = ["run", &data("string2tree.xp"), &data("example.dt"), "--seed", "42", "--trace"];
    let (a, b) = (xtl(&args), xtl(&args));
    assert!(a.status.success());
    assert!(!a.stderr.is_empty());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stderr, b.stderr);
}

#[test]
fn dag_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let dag = dir.path().join("out.dag");
    let dag = dag.to_str().unwrap();
    assert!(xtl(&["run10", &data("tree2string.xp"), &data("example.dt"), "--out", dag]).status.success());
    assert_eq!(stdout(&xtl(&["unfold", dag, &data("example.dt")])), FLAT);
    let stats = stdout(&xtl(&["stats", dag, &data("example.dt")]));
    assert!(stats.contains("unfolded_leaves\t18"), "{stats}");
    assert_eq!(xtl(&["unfold", dag, &data("example.dt"), "--max-nodes", "5"]).status.code(), Some(7));
}

#[test]
fn composing_three_programs() {
    let dir = tempfile::tempdir().unwrap();
    let id = dir.path().join("id.tm");
    std::fs::write(
        &id,
        "states: s\ninput: a b c lbrace rbrace\ntape: a b c lbrace rbrace blank\nblank: blank\nstart: s\nhalt: s\noutput: s\n",
    )
    .unwrap();
    let tm = dir.path().join("tm.xp");
    let tm = tm.to_str().unwrap();
    assert!(xtl(&["--out", tm, "gen", "tm", id.to_str().unwrap()]).status.success());
    let composed = stdout(&xtl(&["compose", &data("tree2string.xp"), tm, &data("string2tree.xp")]));
    let o = xtl_stdin(&["run", "-", &data("example.dt")], &composed);
    assert_eq!(stdout(&o), "doc{a{b{}c{a{}b{}}c{}}}");
}
