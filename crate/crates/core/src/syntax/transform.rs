use std::collections::HashSet;

use super::{walk, Program, Rule, Statement, Template};
use crate::xexpr::{EvalMode, XExpr};
use crate::Name;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Version {
    V1,
    V2,
}

/// `V1` iff every match and statement expression is input-only and
/// polynomial when `//*` ranges over the input alone.
pub fn classify_version(p: &Program) -> Version {
    let ok = |e: &XExpr| e.is_input_only(EvalMode::V1) && e.is_polynomial();
    let mut v1 = true;
    for r in &p.rules {
        v1 &= ok(&r.matches);
        walk(&r.body, &mut |s| {
            if let Some(e) = s.expr() {
                v1 &= ok(e);
            }
        });
    }
    if v1 {
        Version::V1
    } else {
        Version::V2
    }
}

struct Lifter {
    taken: HashSet<Name>,
    next: usize,
    fresh: Vec<Rule>,
}

impl Lifter {
    fn fresh_name(&mut self) -> Name {
        loop {
            let n: Name = format!("lifted_{}", self.next).into();
            self.next += 1;
            if self.taken.insert(n.clone()) {
                return n;
            }
        }
    }

    fn lift_body(&mut self, body: &Template) -> Template {
        let body = self.template(body);
        if let [Statement::Call(_)] = body.as_slice() {
            return body;
        }
        let name = self.fresh_name();
        self.fresh.push(Rule { name: name.clone(), matches: XExpr::AllNodes, mode: None, body });
        vec![Statement::Call(name)]
    }

    fn template(&mut self, m: &Template) -> Template {
        m.iter()
            .map(|s| match s {
                Statement::Foreach { expr, body } => {
                    Statement::Foreach { expr: expr.clone(), body: self.lift_body(body) }
                }
                Statement::Tree { var, body } => Statement::Tree { var: var.clone(), body: self.lift_body(body) },
                Statement::Cons { label, body } => Statement::Cons { label: label.clone(), body: self.template(body) },
                Statement::If { test, then, els } => {
                    Statement::If { test: test.clone(), then: self.template(then), els: self.template(els) }
                }
                other => other.clone(),
            })
            .collect()
    }
}

/// Makes the body of every `foreach` and `tree` a single call to a fresh
/// rule matching `//*` that holds the original body.
pub fn lift_bodies(p: &Program) -> Program {
    let mut l = Lifter { taken: p.rules.iter().map(|r| r.name.clone()).collect(), next: 0, fresh: Vec::new() };
    let mut rules: Vec<Rule> = p.rules.iter().map(|r| Rule { body: l.template(&r.body), ..r.clone() }).collect();
    rules.append(&mut l.fresh);
    Program { rules }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn versions() {
        let t2s = "template tree2string match (//*) { cons a {} cons lbrace {} apply (child::*) cons rbrace {} }";
        assert_eq!(classify_version(&Program::parse(t2s).unwrap()), Version::V1);
        let v2 = "template r match (/*) { tree y { } apply ($y/*) }";
        assert_eq!(classify_version(&Program::parse(v2).unwrap()), Version::V2);
        assert_eq!(classify_version(&Program::default()), Version::V1);
    }

    #[test]
    fn lifting() {
        let plain = Program::parse("template r match (/*) { apply (child::*) }").unwrap();
        assert_eq!(lift_bodies(&plain), plain);
        let p = Program::parse(
            "template lifted_0 match (/*) { foreach (child::*) { vcopy (child::*) cons a { } } tree y { foreach (.) { call lifted_0 } } }",
        )
        .unwrap();
        let lifted = lift_bodies(&p);
        assert_eq!(lifted.rules.len(), 3);
        assert!(lifted.check().is_ok());
        assert_eq!(lift_bodies(&lifted), lifted);
        assert_eq!(classify_version(&lifted), classify_version(&p));
        match &lifted.rules[0].body[0] {
            Statement::Foreach { body, .. } => {
                assert!(matches!(body.as_slice(), [Statement::Call(n)] if &**n == "lifted_1"))
            }
            other => panic!("{other:?}"),
        }
    }
}
