//! Compiling machines into programs over flat trees.
//!
//! The general compiler keeps the tape in two temporary trees: `left` holds
//! the cells left of the head in reverse, `right` the head cell onward. One
//! value variable `st_<q>` per state is nonempty exactly for the current
//! state. The bounded compiler needs no temporary trees: the input children
//! are the cells and value variables `cell_<a>` hold the cells carrying `a`.

use std::fmt::Write;

use super::tm::{Move, TuringMachine};
use super::{chain, label_chain, parse_generated};
use crate::syntax::Program;
use crate::tree::Label;

fn label(s: &str) -> Label {
    Label::new(s).expect("machine symbols are validated identifiers")
}

fn labels(m: &TuringMachine) -> Vec<Label> {
    m.tape.iter().map(|s| label(s)).collect()
}

/// `val st_<q> (1)` for the start state and `()` for the others.
fn state_flags(m: &TuringMachine, out: &mut String) {
    for q in &m.states {
        let v = if *q == m.start { "1" } else { "" };
        writeln!(out, "  val st_{q} ({v})").unwrap();
    }
}

fn switch_state(from: &str, to: &str) -> String {
    if from == to {
        String::new()
    } else {
        format!("val st_{from} () val st_{to} (1) ")
    }
}

const REST_OF_RIGHT: &str = "foreach ($right/*) { vcopy (child::* except child::*[1]) }";

fn tm_transition(m: &TuringMachine, q: &str, a: &str) -> String {
    let t = &m.delta[&(q.to_string(), a.to_string())];
    let (b, blank) = (&t.write, &m.blank);
    let tape = match t.dir {
        Move::S => format!("tree right {{ cons {b} {{ }} {REST_OF_RIGHT} }}"),
        Move::R => format!(
            "tree left {{ cons {b} {{ }} foreach ($left/*) {{ vcopy (child::*) }} }} \
             tree right {{ if (following-sibling::*[1]) {{ {REST_OF_RIGHT} }} else {{ cons {blank} {{ }} }} }}"
        ),
        Move::L => format!(
            "tree right {{ foreach ($left/*) {{ vcopy (child::*[1]) }} cons {b} {{ }} {REST_OF_RIGHT} }} \
             tree left {{ foreach ($left/*) {{ vcopy (child::* except child::*[1]) }} }}"
        ),
    };
    format!("{tape} {}call tm_step", switch_state(q, &t.next))
}

/// Simulates `m` on `flattree(input)`. The output is the whole tape up to
/// trailing blanks, or a single `reject` node when the machine rejects.
pub fn gen_tm_program(m: &TuringMachine) -> Program {
    let blank = &m.blank;
    let mut src = String::from("template tm match (/*) {\n  tree left { }\n");
    writeln!(src, "  tree right {{ if (child::*[1]) {{ vcopy (child::*) }} else {{ cons {blank} {{ }} }} }}").unwrap();
    state_flags(m, &mut src);
    src.push_str("  call tm_step\n}\n");

    let output =
        "tree tape { foreach ($left/*) { apply (child::*[1]) mode tm_rev } foreach ($right/*) { vcopy (child::*) } } \
                  foreach ($tape/*) { apply (child::*[1]) mode tm_out }";
    let states: Vec<(String, String)> = m
        .states
        .iter()
        .map(|q| {
            let body = if *q == m.output {
                output.to_string()
            } else if m.is_halting(q) {
                "cons reject { }".to_string()
            } else {
                let cases: Vec<(String, String)> = m
                    .tape
                    .iter()
                    .filter(|a| m.delta.contains_key(&(q.clone(), (*a).clone())))
                    .map(|a| (format!("name()='{a}'"), tm_transition(m, q, a)))
                    .collect();
                format!(
                    "foreach ($right/*) {{ foreach (child::*[1]) {{ {} }} }}",
                    chain(&cases, Some("cons reject { }"))
                )
            };
            (format!("$st_{q}"), body)
        })
        .collect();
    writeln!(src, "template tm_step match (//*) mode tm_step {{\n  {}\n}}", chain(&states, Some(""))).unwrap();

    let all = labels(m);
    let copy = label_chain(&all, &|l| format!("cons {l} {{ }}"), None);
    writeln!(
        src,
        "template tm_rev match (//*) mode tm_rev {{
           tree rest {{ apply (following-sibling::*[1]) mode tm_rev }}
           tcopy rest
           {copy}
         }}"
    )
    .unwrap();
    let nonblank: Vec<Label> = all.into_iter().filter(|l| l.as_str() != blank).collect();
    let copy = label_chain(&nonblank, &|l| format!("cons {l} {{ }}"), None);
    writeln!(
        src,
        "template tm_out match (//*) mode tm_out {{
           tree rest {{ apply (following-sibling::*[1]) mode tm_out }}
           if (name()='{blank}') {{ foreach ($rest/*) {{ if (child::*[1]) {{ cons {blank} {{ }} }} else {{ }} }} }}
           else {{ {copy} }}
           tcopy rest
         }}"
    )
    .unwrap();
    parse_generated(&src)
}

fn lba_transition(m: &TuringMachine, q: &str, a: &str) -> String {
    let t = &m.delta[&(q.to_string(), a.to_string())];
    let mut s = String::new();
    if t.write != a {
        write!(s, "val cell_{a} ($cell_{a} except .) val cell_{b} ($cell_{b} | .) ", b = t.write).unwrap();
    }
    match t.dir {
        Move::S => {}
        Move::L => s.push_str("val head (preceding-sibling::*[1]) "),
        Move::R => s.push_str("val head (following-sibling::*[1]) "),
    }
    s.push_str(&switch_state(q, &t.next));
    s.push_str("call lba_step");
    s
}

/// Decides `m` on `flattree(lba_input(s))` using only input-only
/// expressions: the output is a single `accept` or `reject` node.
pub fn gen_lba_program(m: &TuringMachine) -> Program {
    let mut src = String::from("template lba match (/*) {\n  val head (child::*[1])\n");
    for a in &m.tape {
        writeln!(src, "  val cell_{a} ()").unwrap();
    }
    state_flags(m, &mut src);
    src.push_str("  apply (child::*[1]) mode lba_init\n}\n");

    let next = "if (following-sibling::*[1]) { apply (following-sibling::*[1]) mode lba_init } else { call lba_step }";
    let init = label_chain(&labels(m), &|a| format!("val cell_{a} ($cell_{a} | .) {next}"), Some("cons reject { }"));
    writeln!(src, "template lba_init match (//*) mode lba_init {{\n  {init}\n}}").unwrap();

    let states: Vec<(String, String)> = m
        .states
        .iter()
        .map(|q| {
            let body = if *q == m.output {
                "cons accept { }".to_string()
            } else if m.is_halting(q) {
                "cons reject { }".to_string()
            } else {
                let cases: Vec<(String, String)> = m
                    .tape
                    .iter()
                    .filter(|a| m.delta.contains_key(&(q.clone(), (*a).clone())))
                    .map(|a| (format!(". intersect $cell_{a}"), lba_transition(m, q, a)))
                    .collect();
                format!("foreach ($head) {{ {} }}", chain(&cases, Some("cons reject { }")))
            };
            (format!("$st_{q}"), body)
        })
        .collect();
    writeln!(src, "template lba_step match (//*) mode lba_step {{\n  {}\n}}", chain(&states, Some(""))).unwrap();
    parse_generated(&src)
}
