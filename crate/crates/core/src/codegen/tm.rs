//! Deterministic Turing machines over a semi-infinite tape, their text form,
//! and the reference interpreter used as an oracle.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::tree::is_identifier;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Move {
    L,
    R,
    S,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Transition {
    pub next: String,
    pub write: String,
    pub dir: Move,
}

/// A machine description. Moving left on the first cell leaves the head
/// where it is; moving right past the end appends a blank.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct TuringMachine {
    pub states: Vec<String>,
    pub input: Vec<String>,
    pub tape: Vec<String>,
    pub blank: String,
    pub start: String,
    pub halt: Vec<String>,
    /// The halting state whose tape is the result; other halting states reject.
    pub output: String,
    pub delta: BTreeMap<(String, String), Transition>,
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("line {line}: {message}")]
pub struct TmParseError {
    pub line: usize,
    pub message: String,
}

/// The left and right endmarkers framing an LBA's input.
pub const LEND: &str = "lend";
pub const REND: &str = "rend";

impl TuringMachine {
    pub fn is_halting(&self, q: &str) -> bool {
        self.halt.iter().any(|h| h == q)
    }

    fn validate(&self) -> Result<(), String> {
        let states: BTreeSet<&str> = self.states.iter().map(String::as_str).collect();
        let tape: BTreeSet<&str> = self.tape.iter().map(String::as_str).collect();
        for s in self.states.iter().chain(&self.tape) {
            if !is_identifier(s) {
                return Err(format!("`{s}` is not an identifier"));
            }
        }
        for q in [&self.start, &self.output].into_iter().chain(&self.halt) {
            if !states.contains(q.as_str()) {
                return Err(format!("unknown state `{q}`"));
            }
        }
        if !self.is_halting(&self.output) {
            return Err(format!("output state `{}` must be halting", self.output));
        }
        if !tape.contains(self.blank.as_str()) {
            return Err("the blank must be a tape symbol".into());
        }
        if self.input.contains(&self.blank) {
            return Err("the blank cannot be an input symbol".into());
        }
        if let Some(a) = self.input.iter().find(|a| !tape.contains(a.as_str())) {
            return Err(format!("input symbol `{a}` is not a tape symbol"));
        }
        if tape.contains("doc") {
            return Err("`doc` cannot be a tape symbol".into());
        }
        for ((q, a), t) in &self.delta {
            if !states.contains(q.as_str()) || !states.contains(t.next.as_str()) {
                return Err(format!("transition on unknown state `{q}` or `{}`", t.next));
            }
            if !tape.contains(a.as_str()) || !tape.contains(t.write.as_str()) {
                return Err(format!("transition on unknown symbol `{a}` or `{}`", t.write));
            }
            if self.is_halting(q) {
                return Err(format!("halting state `{q}` has a transition"));
            }
        }
        Ok(())
    }
}

fn words(s: &str) -> Vec<String> {
    s.split(|c: char| c == ',' || c.is_whitespace()).filter(|w| !w.is_empty()).map(str::to_string).collect()
}

/// Reads the `.tm` text form: `key: values` header lines followed by
/// transitions `q,a -> q',b,M`. `#` starts a comment.
pub fn parse_tm(text: &str) -> Result<TuringMachine, TmParseError> {
    let mut fields: BTreeMap<&str, Vec<String>> = BTreeMap::new();
    let mut delta = BTreeMap::new();
    let mut last_line = 0;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        last_line = line;
        let l = raw.split('#').next().unwrap_or("").trim();
        if l.is_empty() {
            continue;
        }
        let err = |message: String| TmParseError { line, message };
        if let Some((lhs, rhs)) = l.split_once("->") {
            let lhs = words(lhs);
            let rhs = words(rhs);
            let ([q, a], [q2, b, m]) = (lhs.as_slice(), rhs.as_slice()) else {
                return Err(err("expected `q,a -> q',b,L|R|S`".into()));
            };
            let dir = match m.as_str() {
                "L" => Move::L,
                "R" => Move::R,
                "S" => Move::S,
                other => return Err(err(format!("bad move `{other}`"))),
            };
            let t = Transition { next: q2.clone(), write: b.clone(), dir };
            if delta.insert((q.clone(), a.clone()), t).is_some() {
                return Err(err(format!("second transition for ({q}, {a})")));
            }
            continue;
        }
        let Some((key, rest)) = l.split_once(':') else {
            return Err(err(format!("cannot read `{l}`")));
        };
        let key = key.trim();
        if !["states", "input", "tape", "blank", "start", "halt", "output"].contains(&key) {
            return Err(err(format!("unknown section `{key}`")));
        }
        if fields.insert(key, words(rest)).is_some() {
            return Err(err(format!("section `{key}` given twice")));
        }
    }
    let at_end = |message: String| TmParseError { line: last_line, message };
    let mut take = |key: &str| fields.remove(key).ok_or_else(|| at_end(format!("missing `{key}:`")));
    let single = |key: &str, v: Vec<String>| match <[String; 1]>::try_from(v) {
        Ok([s]) => Ok(s),
        Err(_) => Err(at_end(format!("`{key}:` takes exactly one name"))),
    };
    let states = take("states")?;
    let input = take("input")?;
    let tape = take("tape")?;
    let blank = single("blank", take("blank")?)?;
    let start = single("start", take("start")?)?;
    let halt = take("halt")?;
    let output = single("output", take("output")?)?;
    let m = TuringMachine { states, input, tape, blank, start, halt, output, delta };
    m.validate().map_err(at_end)?;
    Ok(m)
}

impl fmt::Display for TuringMachine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "states: {}", self.states.join(" "))?;
        writeln!(f, "input: {}", self.input.join(" "))?;
        writeln!(f, "tape: {}", self.tape.join(" "))?;
        writeln!(f, "blank: {}", self.blank)?;
        writeln!(f, "start: {}", self.start)?;
        writeln!(f, "halt: {}", self.halt.join(" "))?;
        writeln!(f, "output: {}", self.output)?;
        for ((q, a), t) in &self.delta {
            writeln!(f, "{q},{a} -> {},{},{:?}", t.next, t.write, t.dir)?;
        }
        Ok(())
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum TmOutcome {
    /// Halted in the output state; the tape up to trailing blanks.
    Output(Vec<String>),
    /// Halted elsewhere, or no transition applies.
    Reject,
    StepLimit,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TmError {
    #[error("`{0}` is not an input symbol")]
    NotInput(String),
    #[error("head left the bounded tape at step {0}")]
    HeadEscape(u64),
    #[error("endmarker overwritten at step {0}")]
    EndmarkerWritten(u64),
}

fn simulate(m: &TuringMachine, mut tape: Vec<String>, max_steps: u64, bounded: bool) -> Result<TmOutcome, TmError> {
    if tape.is_empty() {
        tape.push(m.blank.clone());
    }
    let mut head = 0usize;
    let mut q = m.start.clone();
    let mut steps = 0u64;
    loop {
        if m.is_halting(&q) {
            if q != m.output {
                return Ok(TmOutcome::Reject);
            }
            while tape.last() == Some(&m.blank) {
                tape.pop();
            }
            return Ok(TmOutcome::Output(tape));
        }
        let Some(t) = m.delta.get(&(q.clone(), tape[head].clone())) else {
            return Ok(TmOutcome::Reject);
        };
        if steps == max_steps {
            return Ok(TmOutcome::StepLimit);
        }
        steps += 1;
        if bounded && (tape[head] == LEND || tape[head] == REND) && t.write != tape[head] {
            return Err(TmError::EndmarkerWritten(steps));
        }
        tape[head] = t.write.clone();
        q = t.next.clone();
        match t.dir {
            Move::S => {}
            Move::L if head == 0 => {
                if bounded {
                    return Err(TmError::HeadEscape(steps));
                }
            }
            Move::L => head -= 1,
            Move::R => {
                head += 1;
                if head == tape.len() {
                    if bounded {
                        return Err(TmError::HeadEscape(steps));
                    }
                    tape.push(m.blank.clone());
                }
            }
        }
    }
}

fn check_input<S: AsRef<str>>(m: &TuringMachine, input: &[S]) -> Result<Vec<String>, TmError> {
    input
        .iter()
        .map(|s| {
            let s = s.as_ref();
            if m.input.iter().any(|a| a == s) {
                Ok(s.to_string())
            } else {
                Err(TmError::NotInput(s.to_string()))
            }
        })
        .collect()
}

/// Runs `m` on `input` with the head on the first cell.
pub fn tm_run<S: AsRef<str>>(m: &TuringMachine, input: &[S], max_steps: u64) -> Result<TmOutcome, TmError> {
    simulate(m, check_input(m, input)?, max_steps, false)
}

/// `lend input rend`: the tape of a linear bounded machine.
pub fn lba_input<S: AsRef<str>>(input: &[S]) -> Vec<String> {
    let mut t = vec![LEND.to_string()];
    t.extend(input.iter().map(|s| s.as_ref().to_string()));
    t.push(REND.to_string());
    t
}

/// Runs `m` as a linear bounded machine: the tape is the input between
/// endmarkers, the head starts on the left endmarker and may not leave the
/// tape or overwrite a marker.
pub fn lba_run<S: AsRef<str>>(m: &TuringMachine, input: &[S], max_steps: u64) -> Result<TmOutcome, TmError> {
    simulate(m, lba_input(&check_input(m, input)?), max_steps, true)
}
