//! Acceptance run: one line per criterion, nonzero exit if any fails.

use std::collections::BTreeSet;
use std::sync::Arc;
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use xtl_core::codegen::*;
use xtl_core::dag::{evaluate_dag, DagError, DagLimits, DEFAULT_MAX_NODES};
use xtl_core::engine::config::{active_ifs, init, rewrite_if_at, to_template};
use xtl_core::engine::{explore_schedules, fuzz_confluence, run, RunOutcome, Strategy};
use xtl_core::fuzz::{random_if_template, random_program, random_tree, ProgramShape};
use xtl_core::lexer::tokenize;
use xtl_core::syntax::{classify_version, template_to_string, Program, Version};
use xtl_core::tree::*;
use xtl_core::xexpr::{eval, project_input_only, Context, EvalMode, Item, Triple, Value, XExpr};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome, Option<Duration>);

const EXAMPLE: &str = "a{b{}c{a{}b{}}c{}}";

/// The published single-label tree-to-string program, in this repository's syntax.
const PUBLISHED_TREE2STRING: &str = "
template tree2string match (//*)
{
  cons a { }
  cons lbrace { }
  apply (child::*)
  cons rbrace { }
}";

/// Its published string-to-tree counterpart.
const PUBLISHED_STRING2TREE: &str = "
template doc match (/*)
{
  apply (child::*[1])
}
template string2tree match (//*)
{
  cons a
  { apply (following-sibling::*[1]) mode dochildren }
  val counter (1)
  call searchnextsibling
}
template dochildren match (//*) mode dochildren
{
  if (name()='lbrace')
  { apply (following-sibling::*[1]) mode dochildren }
  else {
    if (name()='a')
    { call string2tree }
    else { }
  }
}
template searchnextsibling match (//*) mode search
{
  if (name()='lbrace') {
    val counter ($counter+1)
    apply (following-sibling::*[1]) mode search
  }
  else {
    if (name()='a')
    { apply (following-sibling::*[1]) mode search }
    else {
      val counter ($counter-1)
      if ($counter = 1)
      { apply (following-sibling::*[1]) mode dochildren }
      else
      { apply (following-sibling::*[1]) mode search }
    }
  }
}";

fn labels(s: &[&str]) -> Vec<Label> {
    s.iter().map(|l| Label::new(l).unwrap()).collect()
}

fn machine(name: &str) -> TuringMachine {
    let path = format!("{}/fixtures/{name}.tm", env!("CARGO_MANIFEST_DIR"));
    parse_tm(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn final_tree(p: &Program, t: &DataTree, max_steps: u64) -> Result<DataTree, String> {
    match run(p, t, Strategy::LeftmostOutermost, max_steps) {
        RunOutcome::Final { tree, .. } => Ok(tree),
        other => Err(other.to_string()),
    }
}

fn doc_of(t: &DataTree) -> DataTree {
    maketree(&DataForest(vec![t.clone()]))
}

fn tokens(src: &str) -> Vec<String> {
    tokenize(src).unwrap().into_iter().map(|(t, _)| format!("{t:?}")).collect()
}

fn ensure(ok: bool, why: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(why())
    }
}

fn published_programs() -> Outcome {
    let a = labels(&["a"]);
    let t2s = gen_tree2string(&a).unwrap();
    let s2t = gen_string2tree(&a).unwrap();
    ensure(tokens(&t2s.to_string()) == tokens(PUBLISHED_TREE2STRING), || format!("tree2string differs:\n{t2s}"))?;
    ensure(tokens(&s2t.to_string()) == tokens(PUBLISHED_STRING2TREE), || format!("string2tree differs:\n{s2t}"))?;
    let flatten = gen_tree2string(&labels(&["a", "b", "c"])).unwrap();
    let out = final_tree(&flatten, &parse_tree(EXAMPLE).unwrap(), 100_000)?;
    // a{b{}c{a{}b{}}c{}} spelled out symbol by symbol
    let expected = flattree(&[
        "a", "lbrace", "b", "lbrace", "rbrace", "c", "lbrace", "a", "lbrace", "rbrace", "b", "lbrace", "rbrace",
        "rbrace", "c", "lbrace", "rbrace", "rbrace",
    ]);
    ensure(is_isomorphic(&out, &expected), || format!("got {}", tree_to_string(&out)))?;
    Ok("both programs token-identical; running example flattened exactly".into())
}

fn round_trip() -> Outcome {
    let sigma = labels(&["a", "b", "c"]);
    let enc = gen_tree2string(&sigma).unwrap();
    let dec = gen_string2tree(&sigma).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut failures = 0;
    for _ in 0..300 {
        let t = random_tree(&mut rng, &sigma, 40);
        let flat = final_tree(&enc, &t, 1_000_000)?;
        let back = final_tree(&dec, &flat, 1_000_000)?;
        failures += usize::from(!is_isomorphic(&back, &doc_of(&t)));
    }
    ensure(failures == 0, || format!("{failures}/300 trees not reproduced"))?;
    Ok("300/300 trees reproduced".into())
}

fn tm_inputs(name: &str, rng: &mut ChaCha8Rng) -> Vec<DataTree> {
    match name {
        "identity" => (0..8).map(|_| random_tree(rng, &labels(&["a", "b", "c"]), 8)).collect(),
        "unary_increment" => (0..=8).map(|k| parse_tree(&format!("u{{{}}}", "a{}".repeat(k))).unwrap()).collect(),
        _ => (0..10)
            .map(|_| {
                let k = rng.gen_range(0..=8);
                let digits: String = (0..k).map(|_| if rng.gen() { "one{}" } else { "zero{}" }).collect();
                parse_tree(&format!("n{{{digits}}}")).unwrap()
            })
            .collect(),
    }
}

fn end_to_end() -> Outcome {
    let sigma = labels(&["a", "b", "c", "u", "n", "zero", "one"]);
    let enc = gen_tree2string(&sigma).unwrap();
    let dec = gen_string2tree(&sigma).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut total = 0;
    for name in ["identity", "unary_increment", "binary_successor"] {
        let m = machine(name);
        let composed = compose(&enc, &gen_tm_program(&m), &dec).map_err(|e| e.to_string())?;
        ensure(classify_version(&composed) == Version::V2, || "composition should be v2".into())?;
        for t in tm_inputs(name, &mut rng) {
            let TmOutcome::Output(s) = tm_run(&m, &string_symbols(&t), 100_000).map_err(|e| e.to_string())? else {
                return Err(format!("{name} did not accept {}", tree_to_string(&t)));
            };
            let want = tree_from_symbols(&s).ok_or_else(|| format!("{name} produced a non-tree string"))?;
            let got = final_tree(&composed, &t, 5_000_000)?;
            ensure(is_isomorphic(&got, &doc_of(&want)), || {
                format!(
                    "{name} on {}: got {}, want {}",
                    tree_to_string(&t),
                    tree_to_string(&got),
                    tree_to_string(&want)
                )
            })?;
            total += 1;
        }
    }
    Ok(format!("{total}/{total} machine runs agree"))
}

fn confluence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let shape = ProgramShape::default();
    let mut finals = 0;
    for i in 0..200 {
        let p = random_program(&mut rng, &shape);
        let t = random_tree(&mut rng, &shape.labels, 6);
        let seeds: Vec<u64> = (0..5).map(|s| rng.gen::<u64>() ^ s).collect();
        let report = fuzz_confluence(&p, &t, &seeds, 200_000);
        ensure(report.is_confluent(), || format!("program {i} on {}: {report}\n{p}", tree_to_string(&t)))?;
        finals += report.finals();
    }
    let tiny = ProgramShape { max_groups: 2, max_rules_per_group: 2, max_body: 2, max_depth: 1, ..shape };
    let (mut instances, mut tried) = (0, 0);
    while instances < 50 {
        tried += 1;
        ensure(tried < 20_000, || format!("only {instances} tiny instances found"))?;
        let p = random_program(&mut rng, &tiny);
        let t = random_tree(&mut rng, &tiny.labels, 3);
        let Some(x) = explore_schedules(&p, &t, 12, 200_000) else { continue };
        if x.longest < 3 {
            continue;
        }
        ensure(x.errors.is_empty() && x.normal_forms.len() == 1, || {
            format!("{} normal forms, errors {:?}\n{p}", x.normal_forms.len(), x.errors)
        })?;
        instances += 1;
    }
    Ok(format!("200 programs x 5 schedules agree ({finals} finals); 50 exhaustive instances, one normal form each"))
}

/// Every normal form reachable by rewriting the active ifs in any order.
fn if_normal_forms(list: Vec<xtl_core::engine::CNode>, out: &mut BTreeSet<String>, visited: &mut usize) {
    *visited += 1;
    let ifs = active_ifs(&list);
    if ifs.is_empty() {
        out.insert(template_to_string(&to_template(&list)));
        return;
    }
    for path in ifs {
        let mut next = list.clone();
        rewrite_if_at(&mut next, &path, EvalMode::V1).expect("tests evaluate");
        if_normal_forms(next, out, visited);
    }
}

fn if_uniqueness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let sigma = labels(&["a", "b", "c"]);
    let mut visited = 0;
    let mut most_ifs = 0;
    for _ in 0..500 {
        let m = random_if_template(&mut rng, 6, &sigma);
        let t = random_tree(&mut rng, &sigma, 6);
        let nodes: Vec<NodeId> = t.nodes().collect();
        let n = *nodes.choose(&mut rng).unwrap();
        let size = rng.gen_range(1..=nodes.len() as u32);
        let triple = Triple { item: Item::Node(n), position: rng.gen_range(1..=size), size };
        let c = Arc::new(Context::initial(t).with_triple(triple));
        let list = init(&m, &c);
        most_ifs = most_ifs.max(active_ifs(&list).len());
        let mut forms = BTreeSet::new();
        if_normal_forms(list, &mut forms, &mut visited);
        ensure(forms.len() == 1, || format!("{} normal forms for {}", forms.len(), template_to_string(&m)))?;
    }
    Ok(format!("500/500 unique; {visited} rewrite states explored, up to {most_ifs} ifs active at once"))
}

/// Handwritten input-only programs with an input each.
fn handwritten() -> Vec<(Program, DataTree)> {
    let example = || parse_tree(EXAMPLE).unwrap();
    let sigma = labels(&["a", "b", "c"]);
    let mut out = vec![
        (gen_tree2string(&sigma).unwrap(), example()),
        (gen_string2tree(&sigma).unwrap(), flattree(&string_symbols(&example()))),
        (gen_doubling(3), parse_tree("r{}").unwrap()),
        (gen_lba_program(&machine("palindrome")), flattree(&lba_input(&["a", "b", "a"]))),
        (identity_program(), example()),
        (Program::default(), example()),
    ];
    let sources = [
        "template m match (/*) { vcopy (child::*[1]) vcopy (//*) }",
        "template m match (/*) { apply (child::*) mode x apply (child::*) }
         template x match (//*) mode x { cons x { apply (child::*) mode x } }
         template d match (//*) { cons d { } }",
        "template m match (/*) { tree y { apply (child::*) mode c } cons out { tcopy y tcopy y } }
         template c match (//*) mode c { cons n { apply (child::*) mode c } }",
        "template m match (/*) { foreach (child::*) { if (position() = 1) { cons first { } } else { cons other { } } } }",
        "template m match (/*) { val x (child::*[1]) foreach (child::* except $x) { cons rest { } } }",
        "template m match (/*) { val c (1) if ($c = 1) { cons one { } } else { } apply (child::*) mode k }
         template k match (//*) mode k { val p (position()) if ($p = 1) { cons p1 { } } else { cons pn { } } }",
        "template m match (/*) { apply (child::*[1]) mode w }
         template w match (//*) mode w { cons s { } apply (following-sibling::*[1]) mode w }",
        "template m match (/*) { call f cons end { } }
         template f match (//*) mode none { cons f { } call g }
         template g match (//*) mode none { cons g { } }",
        "template m match (/*) { tree y { cons a { } } tree z { tcopy y cons b { tcopy y } } tcopy z tcopy y }",
        "template m match (//*) { if (name()='c') { cons seen { } } else { apply (child::*) } }",
        "template m match (/*) { val x (child::*) foreach ($x intersect child::*[1]) { cons hit { } } vcopy ($x intersect child::*) }",
        "template m match (/*) { apply (child::*) mode p }
         template p match (//*) mode p { if (preceding-sibling::*[1]) { cons after { } } else { cons head { } } }",
        "template m match (/*) { val x (child::*[1]) val x (child::* except $x) foreach ($x) { cons k { } } }",
        "template m match (/*) { tree y { apply (child::*) mode t } tree z { tcopy y tcopy y } tcopy z }
         template t match (//*) mode t { cons q { apply (child::*) mode t } }",
    ];
    for src in sources {
        out.push((Program::parse(src).unwrap(), example()));
    }
    out
}

fn dag_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let shape = ProgramShape { temp_reads: false, ..ProgramShape::default() };
    let mut cases: Vec<(Program, DataTree)> = (0..200)
        .map(|_| {
            let p = random_program(&mut rng, &shape);
            let t = random_tree(&mut rng, &shape.labels, 7);
            (p, t)
        })
        .collect();
    let hand = handwritten();
    ensure(hand.len() == 20, || format!("{} handwritten programs", hand.len()))?;
    cases.extend(hand);
    for (i, (p, t)) in cases.iter().enumerate() {
        ensure(classify_version(p) == Version::V1, || format!("case {i} is not v1:\n{p}"))?;
        let direct = final_tree(p, t, 1_000_000).map_err(|e| format!("case {i}: {e}\n{p}"))?;
        let dag = evaluate_dag(p, t, DagLimits::default()).map_err(|e| format!("case {i}: {e}\n{p}"))?;
        let unfolded = dag.unfold(DEFAULT_MAX_NODES).map_err(|e| format!("case {i}: {e}"))?;
        ensure(is_isomorphic(&unfolded, &direct), || {
            format!("case {i}: dag {} vs direct {}\n{p}", tree_to_string(&unfolded), tree_to_string(&direct))
        })?;
    }
    Ok("220/220 unfoldings match the direct engine".into())
}

const LOOPS: [(&str, &str); 10] = [
    ("template loop match (/*) { call loop }", "a{}"),
    ("template f match (/*) { call g } template g match (//*) mode g { call f }", "a{}"),
    ("template r match (/*) { apply (/*) }", "a{b{}}"),
    (
        "template m match (/*) { apply (child::*[1]) mode w }
         template w match (//*) mode w { apply (following-sibling::*[1]) mode v }
         template v match (//*) mode v { apply (preceding-sibling::*[1]) mode w }",
        "a{b{}c{}}",
    ),
    (
        "template r match (/*) { val x (child::*) call s } template s match (//*) mode s { val x (child::*) call r }",
        "a{b{}c{}}",
    ),
    (
        "template r match (/*) { val c (1) apply (/*) mode k } template k match (//*) mode k { val c (1) apply (/*) }",
        "a{}",
    ),
    ("template r match (/*) { foreach (child::*[1]) { apply (/*) } }", "a{b{}}"),
    ("template r match (/*) { if (child::*) { apply (/*) } else { } }", "a{b{}}"),
    (
        "template m match (/*) { apply (child::*) mode d }
         template d match (//*) mode d { apply (/*) mode e }
         template e match (/*) mode e { apply (child::*[1]) mode d }",
        "a{b{}}",
    ),
    ("template r match (//*) { val x (.) apply (//* except .) }", "a{b{}}"),
];

fn nontermination() -> Outcome {
    for (i, (src, input)) in LOOPS.iter().enumerate() {
        let p = Program::parse(src).unwrap();
        ensure(classify_version(&p) == Version::V1, || format!("loop {i} is not v1"))?;
        let t = parse_tree(input).unwrap();
        match evaluate_dag(&p, &t, DagLimits::default()) {
            Err(DagError::Nontermination { cycle }) => {
                let (first, last) = (cycle.first().unwrap(), cycle.last().unwrap());
                ensure(cycle.len() >= 2, || format!("loop {i}: witness too short"))?;
                ensure(first.rule == last.rule && first.projection == last.projection, || {
                    format!("loop {i}: endpoints {first:?} and {last:?} differ")
                })?;
            }
            other => return Err(format!("loop {i}: expected nontermination, got {other:?}")),
        }
        for budget in [10_000, 100_000, 1_000_000] {
            let out = run(&p, &t, Strategy::LeftmostOutermost, budget);
            ensure(matches!(out, RunOutcome::StepLimit { .. }), || format!("loop {i} at {budget}: {out}"))?;
        }
    }
    Ok("10/10 witnesses valid; direct engine exhausts every budget".into())
}

fn compression() -> Outcome {
    for k in [10usize, 20, 30] {
        let dag = evaluate_dag(&gen_doubling(k), &parse_tree("r{}").unwrap(), DagLimits::default())
            .map_err(|e| e.to_string())?;
        let stats = dag.stats();
        ensure(stats.entries <= k + 2, || format!("k={k}: {} entries", stats.entries))?;
        ensure(stats.unfolded_leaves == BigUint::from(1u64) << k, || {
            format!("k={k}: {} leaves", stats.unfolded_leaves)
        })?;
        match (k, dag.unfold(DEFAULT_MAX_NODES)) {
            (10, Ok(t)) => ensure(t.leaf_count() == 1024, || format!("{} leaves unfolded", t.leaf_count()))?,
            (10, Err(e)) => return Err(format!("k=10 not unfolded: {e}")),
            (30, Ok(_)) => return Err("k=30 unfolded at the default limit".into()),
            _ => {}
        }
    }
    Ok("entries <= k+2 and 2^k leaves for k = 10, 20, 30".into())
}

fn lba_in_v1() -> Outcome {
    let pal = machine("palindrome");
    let p = gen_lba_program(&pal);
    ensure(classify_version(&p) == Version::V1, || "not v1".into())?;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut inputs: Vec<Vec<&str>> = vec![vec!["a", "b", "b", "a"], vec!["a", "b", "a", "b", "a", "a"]];
    while inputs.len() < 10 {
        let n = rng.gen_range(0..=6);
        inputs.push((0..n).map(|_| *["a", "b"].choose(&mut rng).unwrap()).collect());
    }
    let mut accepted = 0;
    for s in &inputs {
        let want = match lba_run(&pal, s, 100_000).map_err(|e| e.to_string())? {
            TmOutcome::Output(_) => "accept",
            TmOutcome::Reject => "reject",
            TmOutcome::StepLimit => return Err("reference run did not halt".into()),
        };
        accepted += usize::from(want == "accept");
        let dag = evaluate_dag(&p, &flattree(&lba_input(s)), DagLimits::default()).map_err(|e| e.to_string())?;
        let got = tree_to_string(&dag.unfold(10).map_err(|e| e.to_string())?);
        ensure(got == format!("doc{{{want}{{}}}}"), || format!("{s:?}: got {got}, want {want}"))?;
    }
    Ok(format!("10/10 decisions agree ({accepted} accepted)"))
}

fn random_value(rng: &mut ChaCha8Rng, nodes: &[NodeId], max_counter: u32) -> Value {
    match rng.gen_range(0..3) {
        0 => Value(vec![Item::Counter(rng.gen_range(1..=max_counter))]),
        1 => Value::empty(),
        _ => {
            let k = rng.gen_range(1..=nodes.len());
            let mut picked: Vec<NodeId> = nodes.choose_multiple(rng, k).copied().collect();
            picked.sort();
            Value(picked.into_iter().map(Item::Node).collect())
        }
    }
}

fn builtin_samples() -> Vec<XExpr> {
    let atoms = [
        "/*",
        "child::*",
        "//*",
        "child::*[1]",
        "following-sibling::*[1]",
        "preceding-sibling::*[1]",
        ".",
        "position()",
        "()",
        "1",
        "$x",
        "$y/*",
        "$c+1",
        "$c-1",
        "position() = $c",
        "name()='a'",
        "child::* | $x",
        "$x intersect //*",
        "//* except $x",
    ];
    atoms.iter().map(|s| XExpr::parse(s).unwrap()).collect()
}

fn obliviousness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let sigma = labels(&["a", "b", "c"]);
    let flagged: Vec<XExpr> = builtin_samples().into_iter().filter(|e| e.is_input_only(EvalMode::V1)).collect();
    let mut violations = 0;
    for e in &flagged {
        for _ in 0..1000 {
            let t = random_tree(&mut rng, &sigma, 10);
            let nodes: Vec<NodeId> = t.nodes().collect();
            let n = nodes.len() as u32;
            let size = rng.gen_range(1..=n);
            let triple =
                Triple { item: Item::Node(*nodes.choose(&mut rng).unwrap()), position: rng.gen_range(1..=size), size };
            let mut c = Context::initial(t)
                .with_value("x".into(), random_value(&mut rng, &nodes, n))
                .with_value("c".into(), Value(vec![Item::Counter(rng.gen_range(1..=n))]))
                .with_triple(triple);
            for y in ["y", "z"] {
                if rng.gen() {
                    c = c.with_tree(y.into(), doc_of(&random_tree(&mut rng, &sigma, 10)));
                }
            }
            let hat = project_input_only(&c).map_err(|e| e.to_string())?;
            let full = format!("{:?}", eval(e, &c, EvalMode::V1));
            let projected = format!("{:?}", eval(e, &hat, EvalMode::V1));
            violations += usize::from(full != projected);
        }
    }
    ensure(violations == 0, || format!("{violations} violations"))?;
    Ok(format!("{} input-only builtins x 1000 contexts, 0 violations", flagged.len()))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("published programs", published_programs, Some(Duration::from_secs(1))),
        ("round trip", round_trip, Some(Duration::from_secs(30))),
        ("machines end to end", end_to_end, Some(Duration::from_secs(120))),
        ("confluence", confluence, Some(Duration::from_secs(300))),
        ("if-rewriting normal forms", if_uniqueness, None),
        ("dag and direct agree", dag_equivalence, Some(Duration::from_secs(300))),
        ("nontermination witnesses", nontermination, None),
        ("compression", compression, Some(Duration::from_secs(10))),
        ("bounded machine in v1", lba_in_v1, Some(Duration::from_secs(60))),
        ("input-only obliviousness", obliviousness, None),
    ];
    let only: Option<usize> = std::env::args().filter_map(|a| a.parse().ok()).next();
    let mut failed = 0;
    for (i, (name, check, limit)) in criteria.into_iter().enumerate() {
        if only.is_some_and(|o| o != i + 1) {
            continue;
        }
        let start = Instant::now();
        let mut result = check();
        let elapsed = start.elapsed();
        if let (Ok(_), Some(limit)) = (&result, limit) {
            if elapsed > limit {
                result = Err(format!("took {elapsed:.2?}, limit {limit:?}"));
            }
        }
        match result {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail} [{elapsed:.2?}]", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {why} [{elapsed:.2?}]", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
