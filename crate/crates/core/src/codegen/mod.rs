//! Program generators: the tree/string encoders, machine compilers,
//! composition through modes, and the doubling family.

mod compile;
mod compose;
mod tm;

use std::fmt::Write;

use thiserror::Error;

pub use compile::{gen_lba_program, gen_tm_program};
pub use compose::{compose, ComposeError};
pub use tm::{lba_input, lba_run, parse_tm, tm_run, Move, TmError, TmOutcome, TmParseError, Transition, TuringMachine};

use crate::syntax::Program;
use crate::tree::Label;

pub const RESERVED: [&str; 3] = ["lbrace", "rbrace", "doc"];

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CodegenError {
    #[error("`{0}` is reserved and cannot be part of the alphabet")]
    Reserved(String),
    #[error("the alphabet is empty")]
    EmptyAlphabet,
}

fn check_alphabet(sigma: &[Label]) -> Result<Vec<Label>, CodegenError> {
    if sigma.is_empty() {
        return Err(CodegenError::EmptyAlphabet);
    }
    if let Some(l) = sigma.iter().find(|l| RESERVED.contains(&l.as_str())) {
        return Err(CodegenError::Reserved(l.to_string()));
    }
    let mut s = sigma.to_vec();
    s.sort();
    s.dedup();
    Ok(s)
}

/// `if (t1) { b1 } else { if (t2) { b2 } else { ... } }`. Without `last` the
/// final case is taken unconditionally.
fn chain(cases: &[(String, String)], last: Option<&str>) -> String {
    match (cases, last) {
        ([(_, body)], None) => body.clone(),
        ([], Some(tail)) => tail.to_string(),
        ([(test, body), rest @ ..], _) => format!("if ({test}) {{ {body} }} else {{ {} }}", chain(rest, last)),
        ([], None) => String::new(),
    }
}

fn label_chain(labels: &[Label], branch: &dyn Fn(&Label) -> String, last: Option<&str>) -> String {
    let cases: Vec<(String, String)> = labels.iter().map(|l| (format!("name()='{l}'"), branch(l))).collect();
    chain(&cases, last)
}

fn parse_generated(src: &str) -> Program {
    Program::parse(src).unwrap_or_else(|e| panic!("generated program does not parse: {e}\n{src}"))
}

/// `t` to `flattree(string(t))`. With a single label this is exactly the
/// four-statement rule; more labels get a name test chain.
pub fn gen_tree2string(sigma: &[Label]) -> Result<Program, CodegenError> {
    let sigma = check_alphabet(sigma)?;
    let emit = label_chain(&sigma, &|l| format!("cons {l} {{ }}"), None);
    Ok(parse_generated(&format!(
        "template tree2string match (//*) {{
           {emit}
           cons lbrace {{ }}
           apply (child::*)
           cons rbrace {{ }}
         }}"
    )))
}

/// `flattree(string(t))` back to `t`, threading a brace counter through the
/// `search` mode.
pub fn gen_string2tree(sigma: &[Label]) -> Result<Program, CodegenError> {
    let sigma = check_alphabet(sigma)?;
    let open =
        label_chain(&sigma, &|l| format!("cons {l} {{ apply (following-sibling::*[1]) mode dochildren }}"), None);
    let child = label_chain(&sigma, &|_| "call string2tree".into(), Some(""));
    let skip = label_chain(&sigma, &|_| "apply (following-sibling::*[1]) mode search".into(), Some("CLOSE"));
    let close = "val counter ($counter-1)
                 if ($counter = 1) { apply (following-sibling::*[1]) mode dochildren }
                 else { apply (following-sibling::*[1]) mode search }";
    let skip = skip.replace("CLOSE", close);
    Ok(parse_generated(&format!(
        "template doc match (/*) {{ apply (child::*[1]) }}
         template string2tree match (//*) {{
           {open}
           val counter (1)
           call searchnextsibling
         }}
         template dochildren match (//*) mode dochildren {{
           if (name()='lbrace') {{ apply (following-sibling::*[1]) mode dochildren }}
           else {{ {child} }}
         }}
         template searchnextsibling match (//*) mode search {{
           if (name()='lbrace') {{ val counter ($counter+1) apply (following-sibling::*[1]) mode search }}
           else {{ {skip} }}
         }}"
    )))
}

/// `k` chained doublings of a single leaf: `2^k` leaves in the output.
pub fn gen_doubling(k: usize) -> Program {
    assert!(k >= 1, "doubling needs at least one level");
    let mut src = String::from("template doubling match (/*) {\n  tree y1 { cons a { } }\n");
    for i in 1..k {
        writeln!(src, "  tree y{} {{ tcopy y{i} tcopy y{i} }}", i + 1).unwrap();
    }
    writeln!(src, "  tcopy y{k} tcopy y{k}\n}}").unwrap();
    parse_generated(&src)
}

/// Copies the children of the root, so doc-rooted trees map to themselves.
pub fn identity_program() -> Program {
    parse_generated("template identity match (/*) { vcopy (child::*) }")
}
