//! Sequential composition of three programs into one.
//!
//! Stage `i` gets its own namespace: rules, modes and variables are prefixed
//! with `s<i>_` and modeless rules move to mode `s<i>`. Each stage after the
//! first reads the previous stage's output from a temporary tree, so its `/*`
//! becomes `$stage<i-1>/*`.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::syntax::{Program, ProgramError, Rule, Statement, Template};
use crate::xexpr::XExpr;
use crate::Name;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ComposeError {
    #[error("name `{0}` is produced twice while renaming stages")]
    Collision(String),
    #[error("stage {stage}, rule `{rule}`: `//*` outside a match pattern would see the other stages' trees")]
    GlobalSelect { stage: usize, rule: String },
    #[error(transparent)]
    Invalid(#[from] ProgramError),
}

struct Stage {
    prefix: String,
    /// The temporary tree holding this stage's input, if not the real input.
    input: Option<Name>,
}

impl Stage {
    fn name(&self, n: &str) -> Name {
        format!("{}_{n}", self.prefix).into()
    }

    fn mode(&self, m: Option<&Name>) -> Name {
        match m {
            None => self.prefix.as_str().into(),
            Some(m) => self.name(m),
        }
    }

    fn expr(&self, e: &XExpr) -> XExpr {
        use XExpr::*;
        let r = |e: &XExpr| Box::new(self.expr(e));
        match e {
            Root => match &self.input {
                Some(y) => TreeRoot(y.clone()),
                None => Root,
            },
            Var(x) => Var(self.name(x)),
            TreeRoot(y) => TreeRoot(self.name(y)),
            Inc(x) => Inc(self.name(x)),
            Dec(x) => Dec(self.name(x)),
            Eq(a, b) => Eq(r(a), r(b)),
            Union(a, b) => Union(r(a), r(b)),
            Intersect(a, b) => Intersect(r(a), r(b)),
            Except(a, b) => Except(r(a), r(b)),
            other => other.clone(),
        }
    }

    fn template(&self, m: &Template, modes: &mut BTreeSet<Name>) -> Template {
        m.iter().map(|s| self.statement(s, modes)).collect()
    }

    fn statement(&self, s: &Statement, modes: &mut BTreeSet<Name>) -> Statement {
        match s {
            Statement::Cons { label, body } => {
                Statement::Cons { label: label.clone(), body: self.template(body, modes) }
            }
            Statement::Apply { expr, mode } => {
                let mode = self.mode(mode.as_ref());
                modes.insert(mode.clone());
                Statement::Apply { expr: self.expr(expr), mode: Some(mode) }
            }
            Statement::Call(r) => Statement::Call(self.name(r)),
            Statement::Foreach { expr, body } => {
                Statement::Foreach { expr: self.expr(expr), body: self.template(body, modes) }
            }
            Statement::Val { var, expr } => Statement::Val { var: self.name(var), expr: self.expr(expr) },
            Statement::Tree { var, body } => Statement::Tree { var: self.name(var), body: self.template(body, modes) },
            Statement::Vcopy(e) => Statement::Vcopy(self.expr(e)),
            Statement::Tcopy(y) => Statement::Tcopy(self.name(y)),
            Statement::If { test, then, els } => Statement::If {
                test: self.expr(test),
                then: self.template(then, modes),
                els: self.template(els, modes),
            },
        }
    }
}

fn selects_everything(m: &Template) -> bool {
    fn has(e: &XExpr) -> bool {
        match e {
            XExpr::AllNodes => true,
            XExpr::Eq(a, b) | XExpr::Union(a, b) | XExpr::Intersect(a, b) | XExpr::Except(a, b) => has(a) || has(b),
            _ => false,
        }
    }
    let mut found = false;
    crate::syntax::walk(m, &mut |s| found |= s.expr().is_some_and(has));
    found
}

fn claim(n: &Name, names: &mut BTreeSet<Name>) -> Result<(), ComposeError> {
    if names.insert(n.clone()) {
        Ok(())
    } else {
        Err(ComposeError::Collision(n.to_string()))
    }
}

/// One program running `p1`, then `p2` on its output, then `p3` on that.
/// Rules that would fall back to the built-in default get an explicit
/// per-stage fallback so they stay within their stage.
pub fn compose(p1: &Program, p2: &Program, p3: &Program) -> Result<Program, ComposeError> {
    let mut rules = Vec::new();
    let mut names = BTreeSet::new();
    let driver: Name = "compose".into();
    claim(&driver, &mut names)?;
    let mut driver_body = Vec::new();
    for (i, p) in [p1, p2, p3].into_iter().enumerate() {
        let stage = Stage { prefix: format!("s{}", i + 1), input: (i > 0).then(|| format!("stage{i}").into()) };
        let mut modes = BTreeSet::new();
        modes.insert(stage.mode(None));
        for r in &p.rules {
            if selects_everything(&r.body) {
                return Err(ComposeError::GlobalSelect { stage: i + 1, rule: r.name.to_string() });
            }
            let name = stage.name(&r.name);
            claim(&name, &mut names)?;
            let mode = stage.mode(r.mode.as_ref());
            modes.insert(mode.clone());
            let body = stage.template(&r.body, &mut modes);
            rules.push(Rule { name, matches: stage.expr(&r.matches), mode: Some(mode), body });
        }
        for (k, mode) in modes.into_iter().enumerate() {
            let name: Name = format!("{}__fallback{k}", stage.prefix).into();
            claim(&name, &mut names)?;
            let body = vec![Statement::Apply { expr: XExpr::Child, mode: Some(stage.mode(None)) }];
            rules.push(Rule { name, matches: XExpr::AllNodes, mode: Some(mode), body });
        }
        let start = Statement::Apply {
            expr: stage.input.clone().map_or(XExpr::Root, XExpr::TreeRoot),
            mode: Some(stage.mode(None)),
        };
        if i < 2 {
            driver_body.push(Statement::Tree { var: format!("stage{}", i + 1).into(), body: vec![start] });
        } else {
            driver_body.push(start);
        }
    }
    rules.insert(0, Rule { name: driver, matches: XExpr::Root, mode: None, body: driver_body });
    let p = Program { rules };
    p.check()?;
    Ok(p)
}
