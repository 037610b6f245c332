//! Program syntax: statements, templates, rules, static checks, and
//! syntax-level transforms.

mod parse;
mod print;
mod transform;

use std::collections::{HashMap, HashSet};

use thiserror::Error;

use crate::lexer::SyntaxError;
use crate::tree::Label;
use crate::xexpr::{ExprType, XExpr, INPUT};
use crate::Name;

pub use parse::parse_program;
pub use print::template_to_string;
pub use transform::{classify_version, lift_bodies, Version};

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Statement {
    Cons { label: Label, body: Template },
    Apply { expr: XExpr, mode: Option<Name> },
    Call(Name),
    Foreach { expr: XExpr, body: Template },
    Val { var: Name, expr: XExpr },
    Tree { var: Name, body: Template },
    Vcopy(XExpr),
    Tcopy(Name),
    If { test: XExpr, then: Template, els: Template },
}

/// A sequence of statements. Denotes a forest once only `cons` remains.
pub type Template = Vec<Statement>;

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum StatementKind {
    Cons,
    Apply,
    Call,
    Foreach,
    Val,
    Tree,
    Vcopy,
    Tcopy,
    If,
}

impl StatementKind {
    pub fn keyword(self) -> &'static str {
        match self {
            StatementKind::Cons => "cons",
            StatementKind::Apply => "apply",
            StatementKind::Call => "call",
            StatementKind::Foreach => "foreach",
            StatementKind::Val => "val",
            StatementKind::Tree => "tree",
            StatementKind::Vcopy => "vcopy",
            StatementKind::Tcopy => "tcopy",
            StatementKind::If => "if",
        }
    }
}

impl Statement {
    pub fn kind(&self) -> StatementKind {
        match self {
            Statement::Cons { .. } => StatementKind::Cons,
            Statement::Apply { .. } => StatementKind::Apply,
            Statement::Call(_) => StatementKind::Call,
            Statement::Foreach { .. } => StatementKind::Foreach,
            Statement::Val { .. } => StatementKind::Val,
            Statement::Tree { .. } => StatementKind::Tree,
            Statement::Vcopy(_) => StatementKind::Vcopy,
            Statement::Tcopy(_) => StatementKind::Tcopy,
            Statement::If { .. } => StatementKind::If,
        }
    }

    /// Child statements in syntax-tree order; for `if`, the then-branch
    /// followed by the else-branch.
    pub fn children(&self) -> Vec<&Statement> {
        match self {
            Statement::Cons { body, .. } | Statement::Foreach { body, .. } | Statement::Tree { body, .. } => {
                body.iter().collect()
            }
            Statement::If { then, els, .. } => then.iter().chain(els).collect(),
            _ => Vec::new(),
        }
    }

    /// The expression in statement position, if any.
    pub fn expr(&self) -> Option<&XExpr> {
        match self {
            Statement::Apply { expr, .. }
            | Statement::Foreach { expr, .. }
            | Statement::Val { expr, .. }
            | Statement::Vcopy(expr)
            | Statement::If { test: expr, .. } => Some(expr),
            _ => None,
        }
    }

    pub fn is_cons(&self) -> bool {
        matches!(self, Statement::Cons { .. })
    }
}

/// Whether the template consists only of `cons` statements.
pub fn is_terminal(m: &[Statement]) -> bool {
    m.iter().all(|s| match s {
        Statement::Cons { body, .. } => is_terminal(body),
        _ => false,
    })
}

/// Visits every statement of `m` in preorder.
pub fn walk<'a>(m: &'a [Statement], f: &mut dyn FnMut(&'a Statement)) {
    for s in m {
        f(s);
        for c in s.children() {
            walk(std::slice::from_ref(c), f);
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Rule {
    pub name: Name,
    pub matches: XExpr,
    pub mode: Option<Name>,
    pub body: Template,
}

#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct Program {
    pub rules: Vec<Rule>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ProgramError {
    #[error("syntax error at {0}")]
    Syntax(#[from] SyntaxError),
    #[error("duplicate rule name `{0}`")]
    DuplicateRule(String),
    #[error("rule `{rule}` calls unknown rule `{target}`")]
    UnresolvedCall { rule: String, target: String },
    #[error("rule `{rule}`: {kind} expression `{expr}` is not of type nodes")]
    NotNodes { rule: String, kind: &'static str, expr: String },
    #[error("rule `{rule}`: variable `{var}` {problem}")]
    Binder { rule: String, var: String, problem: &'static str },
}

impl Program {
    pub fn parse(text: &str) -> Result<Program, ProgramError> {
        parse_program(text)
    }

    pub fn rule(&self, name: &str) -> Option<&Rule> {
        self.rules.iter().find(|r| &*r.name == name)
    }

    /// Runs every static check: unique names, resolved calls, node-typed
    /// apply/vcopy/match expressions, and binder-kind consistency.
    pub fn check(&self) -> Result<(), ProgramError> {
        let mut names = HashSet::new();
        for r in &self.rules {
            if !names.insert(r.name.clone()) {
                return Err(ProgramError::DuplicateRule(r.name.to_string()));
            }
        }
        let (vals, trees) = self.binders();
        for r in &self.rules {
            let rule = || r.name.to_string();
            if r.matches.type_of() != ExprType::Nodes {
                return Err(ProgramError::NotNodes { rule: rule(), kind: "match", expr: r.matches.to_string() });
            }
            let mut err = None;
            let check_expr = |e: &XExpr| {
                let (mut vs, mut ts) = (Vec::new(), Vec::new());
                e.value_vars(&mut vs);
                e.tree_vars(&mut ts);
                for v in vs {
                    if trees.contains(&v) || &*v == INPUT {
                        return Some(ProgramError::Binder {
                            rule: rule(),
                            var: v.to_string(),
                            problem: "names a tree but is used as a value",
                        });
                    }
                }
                for t in ts {
                    if vals.contains(&t) {
                        return Some(ProgramError::Binder {
                            rule: rule(),
                            var: t.to_string(),
                            problem: "names a value but is used as a tree",
                        });
                    }
                }
                None
            };
            if let Some(e) = check_expr(&r.matches) {
                return Err(e);
            }
            walk(&r.body, &mut |s| {
                if err.is_some() {
                    return;
                }
                if let Some(e) = s.expr() {
                    err = check_expr(e);
                }
                err = err.take().or_else(|| match s {
                    Statement::Call(target) if self.rule(target).is_none() => {
                        Some(ProgramError::UnresolvedCall { rule: rule(), target: target.to_string() })
                    }
                    Statement::Apply { expr, .. } | Statement::Vcopy(expr) if expr.type_of() != ExprType::Nodes => {
                        Some(ProgramError::NotNodes { rule: rule(), kind: s.kind().keyword(), expr: expr.to_string() })
                    }
                    Statement::Tcopy(y) if vals.contains(y) => Some(ProgramError::Binder {
                        rule: rule(),
                        var: y.to_string(),
                        problem: "names a value but is copied as a tree",
                    }),
                    Statement::Val { var, .. } | Statement::Tree { var, .. } if &**var == INPUT => {
                        Some(ProgramError::Binder { rule: rule(), var: var.to_string(), problem: "is reserved" })
                    }
                    Statement::Val { var, .. } if trees.contains(var) => Some(ProgramError::Binder {
                        rule: rule(),
                        var: var.to_string(),
                        problem: "is bound both as a value and as a tree",
                    }),
                    _ => None,
                });
            });
            if let Some(e) = err {
                return Err(e);
            }
        }
        Ok(())
    }

    /// Names bound by `val` and by `tree` anywhere in the program.
    fn binders(&self) -> (HashSet<Name>, HashSet<Name>) {
        let (mut vals, mut trees) = (HashSet::new(), HashSet::new());
        for r in &self.rules {
            walk(&r.body, &mut |s| match s {
                Statement::Val { var, .. } => {
                    vals.insert(var.clone());
                }
                Statement::Tree { var, .. } => {
                    trees.insert(var.clone());
                }
                _ => {}
            });
        }
        (vals, trees)
    }

    /// Rule names indexed by position, for quick lookup.
    pub fn index(&self) -> HashMap<Name, usize> {
        self.rules.iter().enumerate().map(|(i, r)| (r.name.clone(), i)).collect()
    }

    /// Every label occurring in a `cons` or `name()` test.
    pub fn labels(&self) -> Vec<Label> {
        fn expr_labels(e: &XExpr, out: &mut Vec<Label>) {
            match e {
                XExpr::NameIs(l) => out.push(l.clone()),
                XExpr::Eq(a, b) | XExpr::Union(a, b) | XExpr::Intersect(a, b) | XExpr::Except(a, b) => {
                    expr_labels(a, out);
                    expr_labels(b, out);
                }
                _ => {}
            }
        }
        let mut out = Vec::new();
        for r in &self.rules {
            walk(&r.body, &mut |s| {
                if let Statement::Cons { label, .. } = s {
                    out.push(label.clone());
                }
                if let Some(e) = s.expr() {
                    expr_labels(e, &mut out);
                }
            });
        }
        out.sort();
        out.dedup();
        out
    }
}

/// Position of a statement in a template: child indices from the top, where
/// the children of an `if` are its then-branch followed by its else-branch.
pub type StmtPath = Vec<usize>;

pub fn statement_at<'a>(m: &'a [Statement], path: &[usize]) -> Option<&'a Statement> {
    let (&first, rest) = path.split_first()?;
    let mut cur = m.get(first)?;
    for &i in rest {
        cur = *cur.children().get(i)?;
    }
    Some(cur)
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("no statement at path {0:?}")]
pub struct PositionError(pub StmtPath);

/// Parent path and the branch (0 = body or then, 1 = else) of the
/// template holding the statement at `path`, plus its index there.
fn sibling_group(m: &[Statement], path: &[usize]) -> (Vec<usize>, usize, usize) {
    let (&last, parent) = path.split_last().expect("nonempty path");
    match parent.is_empty() {
        true => (Vec::new(), 0, last),
        false => match statement_at(m, parent) {
            Some(Statement::If { then, .. }) if last >= then.len() => (parent.to_vec(), 1, last - then.len()),
            _ => (parent.to_vec(), 0, last),
        },
    }
}

/// Whether `s2` is a right sibling of `s1` or a descendant of one.
pub fn in_scope(s1: &[usize], s2: &[usize], m: &[Statement]) -> Result<bool, PositionError> {
    for p in [s1, s2] {
        if statement_at(m, p).is_none() {
            return Err(PositionError(p.to_vec()));
        }
    }
    let (parent1, branch1, idx1) = sibling_group(m, s1);
    // the ancestor-or-self of s2 at s1's depth
    if s2.len() < s1.len() {
        return Ok(false);
    }
    let anc = &s2[..s1.len()];
    let (parent2, branch2, idx2) = sibling_group(m, anc);
    Ok(parent1 == parent2 && branch1 == branch2 && idx2 > idx1)
}
