//! The node-selection expression language: syntax, static typing,
//! input-only classification, and evaluation.

mod context;
mod eval;
mod parse;

use std::fmt;

pub use context::{project_input_only, Context, Env, ExprType, Item, ProjectionError, Store, Triple, Value, INPUT};
pub use eval::{eval, matches_node, EvalCause, EvalError};
pub use parse::parse_expr;

use crate::tree::Label;
use crate::Name;

/// Which language version governs `//*` and the counter range.
///
/// In `V1` mode `//*` ranges over the input tree only and counters are
/// bounded by the input size; in `V2` both range over the whole store.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub enum EvalMode {
    V1,
    #[default]
    V2,
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum XExpr {
    /// `/*`
    Root,
    /// `child::*`
    Child,
    /// `//*`
    AllNodes,
    /// `child::*[1]`
    FirstChild,
    /// `following-sibling::*[1]`
    NextSibling,
    /// `preceding-sibling::*[1]`
    PrevSibling,
    /// `.`
    ContextItem,
    /// `position()`
    Position,
    /// `()`
    Empty,
    /// `1`
    One,
    /// `$x`
    Var(Name),
    /// `$y/*`
    TreeRoot(Name),
    /// `$x+1`
    Inc(Name),
    /// `$x-1`
    Dec(Name),
    /// `e1 = e2`
    Eq(Box<XExpr>, Box<XExpr>),
    /// `name()='a'`
    NameIs(Label),
    Union(Box<XExpr>, Box<XExpr>),
    Intersect(Box<XExpr>, Box<XExpr>),
    Except(Box<XExpr>, Box<XExpr>),
}

impl XExpr {
    pub fn parse(src: &str) -> Result<XExpr, crate::lexer::SyntaxError> {
        let mut toks = crate::lexer::Tokens::new(src)?;
        let e = parse_expr(&mut toks)?;
        if !toks.at_eof() {
            return Err(toks.unexpected("end of expression"));
        }
        Ok(e)
    }

    pub fn var(x: &str) -> XExpr {
        XExpr::Var(x.into())
    }

    pub fn tree_root(y: &str) -> XExpr {
        XExpr::TreeRoot(y.into())
    }

    pub fn name_is(label: &str) -> XExpr {
        XExpr::NameIs(Label::new(label).expect("label"))
    }

    pub fn eq(a: XExpr, b: XExpr) -> XExpr {
        XExpr::Eq(Box::new(a), Box::new(b))
    }

    pub fn union(a: XExpr, b: XExpr) -> XExpr {
        XExpr::Union(Box::new(a), Box::new(b))
    }

    pub fn intersect(a: XExpr, b: XExpr) -> XExpr {
        XExpr::Intersect(Box::new(a), Box::new(b))
    }

    pub fn except(a: XExpr, b: XExpr) -> XExpr {
        XExpr::Except(Box::new(a), Box::new(b))
    }

    pub fn type_of(&self) -> ExprType {
        use XExpr::*;
        match self {
            Root | Child | AllNodes | FirstChild | NextSibling | PrevSibling | TreeRoot(_) | Empty => ExprType::Nodes,
            ContextItem | Position | One | Var(_) | Inc(_) | Dec(_) | Eq(..) | NameIs(_) => ExprType::Mixed,
            Union(a, b) => {
                if a.type_of() == ExprType::Nodes && b.type_of() == ExprType::Nodes {
                    ExprType::Nodes
                } else {
                    ExprType::Mixed
                }
            }
            Intersect(a, b) => {
                if a.type_of() == ExprType::Nodes || b.type_of() == ExprType::Nodes {
                    ExprType::Nodes
                } else {
                    ExprType::Mixed
                }
            }
            Except(a, _) => a.type_of(),
        }
    }

    fn children(&self) -> Vec<&XExpr> {
        use XExpr::*;
        match self {
            Eq(a, b) | Union(a, b) | Intersect(a, b) | Except(a, b) => vec![a, b],
            _ => Vec::new(),
        }
    }

    /// Whether the result never depends on temporary trees.
    pub fn is_input_only(&self, mode: EvalMode) -> bool {
        let here = match self {
            XExpr::TreeRoot(_) => false,
            XExpr::AllNodes => mode == EvalMode::V1,
            _ => true,
        };
        here && self.children().into_iter().all(|c| c.is_input_only(mode))
    }

    /// Every builtin evaluates in time polynomial in the store size.
    pub fn is_polynomial(&self) -> bool {
        true
    }

    /// Tree variables read through `$y/*`.
    pub fn tree_vars(&self, out: &mut Vec<Name>) {
        if let XExpr::TreeRoot(y) = self {
            out.push(y.clone());
        }
        for c in self.children() {
            c.tree_vars(out);
        }
    }

    /// Value variables read through `$x`, `$x+1`, `$x-1`.
    pub fn value_vars(&self, out: &mut Vec<Name>) {
        match self {
            XExpr::Var(x) | XExpr::Inc(x) | XExpr::Dec(x) => out.push(x.clone()),
            _ => {}
        }
        for c in self.children() {
            c.value_vars(out);
        }
    }

    /// Replaces every `/*` with `$var/*`.
    pub fn relativize_root(&self, var: &Name) -> XExpr {
        use XExpr::*;
        let r = |e: &XExpr| Box::new(e.relativize_root(var));
        match self {
            Root => TreeRoot(var.clone()),
            Eq(a, b) => Eq(r(a), r(b)),
            Union(a, b) => Union(r(a), r(b)),
            Intersect(a, b) => Intersect(r(a), r(b)),
            Except(a, b) => Except(r(a), r(b)),
            other => other.clone(),
        }
    }
}

impl fmt::Display for XExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use XExpr::*;
        let binary = |e: &XExpr| matches!(e, Eq(..) | Union(..) | Intersect(..) | Except(..));
        let operand = |f: &mut fmt::Formatter<'_>, e: &XExpr, paren: bool| {
            if paren {
                write!(f, "({e})")
            } else {
                write!(f, "{e}")
            }
        };
        match self {
            Root => f.write_str("/*"),
            Child => f.write_str("child::*"),
            AllNodes => f.write_str("//*"),
            FirstChild => f.write_str("child::*[1]"),
            NextSibling => f.write_str("following-sibling::*[1]"),
            PrevSibling => f.write_str("preceding-sibling::*[1]"),
            ContextItem => f.write_str("."),
            Position => f.write_str("position()"),
            Empty => f.write_str("()"),
            One => f.write_str("1"),
            Var(x) => write!(f, "${x}"),
            TreeRoot(y) => write!(f, "${y}/*"),
            Inc(x) => write!(f, "${x}+1"),
            Dec(x) => write!(f, "${x}-1"),
            NameIs(l) => write!(f, "name()='{l}'"),
            Eq(a, b) => {
                operand(f, a, binary(a))?;
                f.write_str(" = ")?;
                operand(f, b, binary(b))
            }
            Union(a, b) => {
                operand(f, a, matches!(**a, Eq(..)))?;
                f.write_str(" | ")?;
                operand(f, b, matches!(**b, Eq(..) | Union(..)))
            }
            Intersect(a, b) | Except(a, b) => {
                let op = if matches!(self, Intersect(..)) { " intersect " } else { " except " };
                operand(f, a, matches!(**a, Eq(..) | Union(..)))?;
                f.write_str(op)?;
                operand(f, b, binary(b))
            }
        }
    }
}
