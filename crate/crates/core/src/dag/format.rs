//! Text form of a dag: a `root` header, then one `entry` line per entry.
//!
//! ```text
//! root #root@0
//! entry #root@0: @main@1
//! entry main@1: out{@input:/0 @lifted_0@1}
//! ```

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use super::{DNode, Dag, DagEntry};
use crate::tree::{is_identifier, DataTree, Label};

#[derive(Debug, Error, PartialEq, Eq)]
#[error("line {line}: {message}")]
pub struct DagParseError {
    pub line: usize,
    pub message: String,
}

fn write_items(f: &mut fmt::Formatter<'_>, d: &Dag, items: &[DNode]) -> fmt::Result {
    for (i, it) in items.iter().enumerate() {
        if i > 0 {
            f.write_str(" ")?;
        }
        match it {
            DNode::Node(l, kids) => {
                write!(f, "{l}{{")?;
                write_items(f, d, kids)?;
                f.write_str("}")?;
            }
            DNode::Link(e) => write!(f, "@{}@{}", d.entries[*e].rule, d.entries[*e].ctx)?,
            DNode::Input(n) => {
                let path = d.input.path_of(*n).expect("input link into the input tree");
                f.write_str("@input:/")?;
                let parts: Vec<String> = path.iter().map(|i| i.to_string()).collect();
                f.write_str(&parts.join("/"))?;
            }
        }
    }
    Ok(())
}

impl fmt::Display for Dag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let r = &self.entries[self.root];
        writeln!(f, "root {}@{}", r.rule, r.ctx)?;
        for e in &self.entries {
            write!(f, "entry {}@{}:", e.rule, e.ctx)?;
            if !e.content.is_empty() {
                f.write_str(" ")?;
                write_items(f, self, &e.content)?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

fn parse_key(s: &str) -> Option<(String, usize)> {
    let (rule, ctx) = s.rsplit_once('@')?;
    let name_ok = is_identifier(rule) || rule.strip_prefix('#').is_some_and(is_identifier);
    name_ok.then_some(())?;
    Some((rule.to_string(), ctx.parse().ok()?))
}

struct ItemParser<'a> {
    src: &'a [u8],
    pos: usize,
    line: usize,
    keys: &'a HashMap<(String, usize), usize>,
    input: &'a DataTree,
}

impl ItemParser<'_> {
    fn err(&self, message: impl Into<String>) -> DagParseError {
        DagParseError { line: self.line, message: message.into() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn word(&mut self) -> &str {
        let start = self.pos;
        while self.pos < self.src.len() && !matches!(self.src[self.pos], b'{' | b'}' | b' ' | b'\t') {
            self.pos += 1;
        }
        std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("")
    }

    fn items(&mut self, nested: bool) -> Result<Vec<DNode>, DagParseError> {
        let mut out = Vec::new();
        loop {
            self.skip_ws();
            match self.src.get(self.pos) {
                None if nested => return Err(self.err("unclosed `{`")),
                None => return Ok(out),
                Some(b'}') if nested => {
                    self.pos += 1;
                    return Ok(out);
                }
                Some(b'}') => return Err(self.err("unbalanced `}`")),
                Some(_) => out.push(self.item()?),
            }
        }
    }

    fn item(&mut self) -> Result<DNode, DagParseError> {
        let w = self.word().to_string();
        if let Some(path) = w.strip_prefix("@input:/") {
            let mut idx = Vec::new();
            for part in path.split('/').filter(|p| !p.is_empty()) {
                idx.push(part.parse::<usize>().map_err(|_| self.err(format!("bad input path `{w}`")))?);
            }
            let n = self.input.node_at_path(&idx).ok_or_else(|| self.err(format!("no input node at `{w}`")))?;
            return Ok(DNode::Input(n));
        }
        if let Some(key) = w.strip_prefix('@') {
            let k = parse_key(key).ok_or_else(|| self.err(format!("bad link `{w}`")))?;
            let e = self.keys.get(&k).ok_or_else(|| self.err(format!("link to unknown entry `{key}`")))?;
            return Ok(DNode::Link(*e));
        }
        let label = Label::new(&w).map_err(|_| self.err(format!("bad label `{w}`")))?;
        if self.src.get(self.pos) != Some(&b'{') {
            return Err(self.err(format!("expected `{{` after `{w}`")));
        }
        self.pos += 1;
        Ok(DNode::Node(label, self.items(true)?))
    }
}

/// Reads the text form back; input links are resolved against `input`.
pub fn parse_dag(text: &str, input: &DataTree) -> Result<Dag, DagParseError> {
    let lines: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
        .collect();
    let Some(&(hl, header)) = lines.first() else {
        return Err(DagParseError { line: 1, message: "missing `root` header".into() });
    };
    let bad = |line: usize, message: String| DagParseError { line, message };
    let root_key = header
        .strip_prefix("root ")
        .and_then(|k| parse_key(k.trim()))
        .ok_or_else(|| bad(hl, "expected `root <rule>@<id>`".into()))?;
    let mut keys = HashMap::new();
    let mut bodies = Vec::new();
    for &(ln, l) in &lines[1..] {
        let rest = l.strip_prefix("entry ").ok_or_else(|| bad(ln, "expected `entry`".into()))?;
        let (k, body) = rest.split_once(':').ok_or_else(|| bad(ln, "expected `:`".into()))?;
        let key = parse_key(k.trim()).ok_or_else(|| bad(ln, format!("bad entry key `{k}`")))?;
        if keys.insert(key.clone(), bodies.len()).is_some() {
            return Err(bad(ln, format!("duplicate entry `{}`", k.trim())));
        }
        bodies.push((ln, key, body));
    }
    let root = *keys.get(&root_key).ok_or_else(|| bad(hl, "root entry is not defined".into()))?;
    let mut entries = Vec::with_capacity(bodies.len());
    let mut contexts: Vec<usize> = Vec::new();
    for (ln, (rule, ctx), body) in bodies {
        let mut p = ItemParser { src: body.as_bytes(), pos: 0, line: ln, keys: &keys, input };
        entries.push(DagEntry { rule, ctx, content: p.items(false)? });
        contexts.push(ctx);
    }
    contexts.sort_unstable();
    contexts.dedup();
    let dag = Dag { entries, root, input: input.clone(), contexts: contexts.len() };
    if dag.has_cycle() {
        return Err(bad(hl, "links form a cycle".into()));
    }
    Ok(dag)
}

impl Dag {
    fn has_cycle(&self) -> bool {
        fn targets(items: &[DNode], out: &mut Vec<usize>) {
            for it in items {
                match it {
                    DNode::Node(_, kids) => targets(kids, out),
                    DNode::Link(e) => out.push(*e),
                    DNode::Input(_) => {}
                }
            }
        }
        // 0 unvisited, 1 on stack, 2 done
        let mut state = vec![0u8; self.entries.len()];
        for start in 0..self.entries.len() {
            if state[start] != 0 {
                continue;
            }
            let mut stack = vec![(start, Vec::new(), 0usize)];
            targets(&self.entries[start].content, &mut stack[0].1);
            state[start] = 1;
            while let Some((e, succ, i)) = stack.last_mut() {
                if *i == succ.len() {
                    state[*e] = 2;
                    stack.pop();
                    continue;
                }
                let next = succ[*i];
                *i += 1;
                match state[next] {
                    1 => return true,
                    0 => {
                        state[next] = 1;
                        let mut s = Vec::new();
                        targets(&self.entries[next].content, &mut s);
                        stack.push((next, s, 0));
                    }
                    _ => {}
                }
            }
        }
        false
    }
}
