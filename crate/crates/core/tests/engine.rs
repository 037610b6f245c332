use xtl_core::engine::{fuzz_confluence, run, run_traced, trace_line, RunOutcome, StepError, Strategy};
use xtl_core::syntax::Program;
use xtl_core::tree::{flattree, is_isomorphic, parse_tree, string_symbols, tree_to_string};

const EXAMPLE: &str = "a{b{}c{a{}b{}}c{}}";

const TREE2STRING: &str = "
template tree2string match (//*) {
  if (name()='a') { cons a {} } else { if (name()='b') { cons b {} } else { cons c {} } }
  cons lbrace {}
  apply (child::*)
  cons rbrace {}
}";

const STRING2TREE: &str = "
template doc match (/*) { apply (child::*[1]) }
template string2tree match (//*) {
  cons a { apply (following-sibling::*[1]) mode dochildren }
  val counter (1)
  call searchnextsibling
}
template dochildren match (//*) mode dochildren {
  if (name()='lbrace') { apply (following-sibling::*[1]) mode dochildren }
  else { if (name()='a') { call string2tree } else { } }
}
template searchnextsibling match (//*) mode search {
  if (name()='lbrace') { val counter ($counter+1) apply (following-sibling::*[1]) mode search }
  else {
    if (name()='a') { apply (following-sibling::*[1]) mode search }
    else {
      val counter ($counter-1)
      if ($counter=1) { apply (following-sibling::*[1]) mode dochildren }
      else { apply (following-sibling::*[1]) mode search }
    }
  }
}";

fn final_tree(o: &RunOutcome) -> String {
    match o {
        RunOutcome::Final { tree, .. } => tree_to_string(tree),
        other => panic!("expected a final tree, got {other}"),
    }
}

#[test]
fn tree_to_flat_string() {
    let p = Program::parse(TREE2STRING).unwrap();
    let t = parse_tree(EXAMPLE).unwrap();
    let out = run(&p, &t, Strategy::LeftmostOutermost, 100_000);
    let expected = flattree(&string_symbols(&t));
    assert!(is_isomorphic(out.tree().unwrap(), &expected), "{out}");
}

#[test]
fn empty_program_on_a_leaf() {
    let out = run(&Program::default(), &parse_tree("a{}").unwrap(), Strategy::LeftmostOutermost, 100);
    assert_eq!(final_tree(&out), "doc{}");
}

#[test]
fn self_call_hits_the_budget() {
    let p = Program::parse("template loop match (/*) { call loop }").unwrap();
    let out = run(&p, &parse_tree("a{}").unwrap(), Strategy::LeftmostOutermost, 500);
    assert!(matches!(out, RunOutcome::StepLimit { limit: 500 }));
}

#[test]
fn string_back_to_tree() {
    let p = Program::parse(STRING2TREE).unwrap();
    for src in ["a{}", "a{a{}}", "a{a{a{}}a{}}", "a{a{}a{a{}a{}}a{}}"] {
        let t = parse_tree(src).unwrap();
        let out = run(&p, &flattree(&string_symbols(&t)), Strategy::LeftmostOutermost, 100_000);
        assert_eq!(final_tree(&out), format!("doc{{{src}}}"));
    }
}

#[test]
fn string_back_to_tree_is_confluent() {
    let p = Program::parse(STRING2TREE).unwrap();
    let input = flattree(&string_symbols(&parse_tree("a{a{}}").unwrap()));
    let seeds: Vec<u64> = (0..20).collect();
    let report = fuzz_confluence(&p, &input, &seeds, 100_000);
    assert!(report.is_confluent(), "{report}");
    assert_eq!(report.finals(), 20);
    let reference = run(&p, &input, Strategy::LeftmostOutermost, 100_000);
    assert!(is_isomorphic(report.outcomes[0].tree().unwrap(), reference.tree().unwrap()));
    assert_eq!(report.to_string(), "confluent: 20/20 isomorphic");
}

#[test]
fn copies_and_temporary_trees() {
    let p = Program::parse(
        "template main match (/*) {
           tree y { cons a {} cons b {} }
           tcopy y
           vcopy ($y/* | child::*[1])
         }",
    )
    .unwrap();
    let out = run(&p, &parse_tree("r{c{a{}b{}}}").unwrap(), Strategy::LeftmostOutermost, 100);
    assert_eq!(final_tree(&out), "doc{a{}b{}c{a{}b{}}doc{a{}b{}}}");
}

#[test]
fn value_binding_chain() {
    let p = Program::parse(
        "template main match (/*) {
           val x (child::*[1])
           val y ($x | /*)
           foreach ($y) { vcopy (.) }
         }",
    );
    // vcopy (.) is mixed-typed, so it is rejected statically
    assert!(p.is_err());
    let p = Program::parse(
        "template main match (/*) {
           val x (1)
           val y ($x+1)
           if ($y = $x+1) { cons yes {} } else { cons no {} }
           foreach (child::* | /*) { cons item { apply (child::*[1]) mode show } }
         }
         template show match (//*) mode show { cons first {} }",
    )
    .unwrap();
    let out = run(&p, &parse_tree("r{c{a{}}d{}}").unwrap(), Strategy::LeftmostOutermost, 1000);
    assert_eq!(final_tree(&out), "doc{yes{}item{first{}}item{first{}}item{}}");
}

#[test]
fn errors_name_the_statement() {
    let p = Program::parse("template main match (/*) { cons a { tcopy nowhere } }").unwrap();
    let out = run(&p, &parse_tree("r{}").unwrap(), Strategy::LeftmostOutermost, 100);
    match out {
        RunOutcome::EvalError { path, error } => {
            assert_eq!(path, vec![0, 0]);
            assert_eq!(error, StepError::UnboundTree("nowhere".into()));
        }
        other => panic!("{other}"),
    }
    let p = Program::parse("template main match (/*) { val x (1) apply (child::* | $x) }");
    assert!(p.is_err());
    let p = Program::parse("template main match (/*) { val x (1) val z ($x+1) }").unwrap();
    // a single-node input bounds counters by 1
    let out = run(&p, &parse_tree("r{}").unwrap(), Strategy::LeftmostOutermost, 100);
    assert!(matches!(out, RunOutcome::EvalError { .. }), "{out}");
}

#[test]
fn random_schedules_agree_on_temporary_trees() {
    let p = Program::parse(
        "template main match (/*) {
           tree y { apply (child::*) mode copy }
           tree z { tcopy y tcopy y }
           cons out { tcopy z }
           apply (child::*) mode copy
         }
         template c match (//*) mode copy { cons n { apply (child::*) mode copy } }",
    )
    .unwrap();
    let input = parse_tree("r{a{b{}}c{}}").unwrap();
    let report = fuzz_confluence(&p, &input, &(0..30).collect::<Vec<_>>(), 10_000);
    assert!(report.is_confluent(), "{report}");
    assert_eq!(tree_to_string(report.outcomes[0].tree().unwrap()), "doc{out{n{n{}}n{}n{n{}}n{}}n{n{}}n{}}");
}

#[test]
fn trace_lines_are_tab_separated() {
    let p = Program::parse(TREE2STRING).unwrap();
    let mut lines = Vec::new();
    run_traced(&p, &parse_tree("a{}").unwrap(), Strategy::LeftmostOutermost, 100, |i, s| lines.push(trace_line(i, s)));
    assert_eq!(lines.len(), 2);
    let fields: Vec<&str> = lines[0].split('\t').collect();
    assert_eq!(fields[..4], ["1", "apply", "0", "tree2string"]);
    assert_eq!(lines[1].split('\t').nth(1), Some("apply"));
}
