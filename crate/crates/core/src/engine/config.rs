use std::sync::Arc;

use crate::syntax::{Statement, Template};
use crate::tree::{DataForest, DataTree, Label, TreeBuilder};
use crate::xexpr::{eval, Context, EvalError, EvalMode, XExpr};
use crate::Name;

#[derive(Clone, Debug)]
pub enum Kind {
    Cons(Label),
    Apply {
        expr: XExpr,
        mode: Option<Name>,
    },
    Call(Name),
    /// The body is never active; it is instantiated once per item.
    Foreach {
        expr: XExpr,
        body: Arc<Template>,
    },
    Val {
        var: Name,
        expr: XExpr,
    },
    Tree(Name),
    Vcopy(XExpr),
    Tcopy(Name),
    /// Branches stay unexpanded until the test is decided.
    If {
        test: XExpr,
        then: Arc<Template>,
        els: Arc<Template>,
    },
}

impl Kind {
    pub fn keyword(&self) -> &'static str {
        match self {
            Kind::Cons(_) => "cons",
            Kind::Apply { .. } => "apply",
            Kind::Call(_) => "call",
            Kind::Foreach { .. } => "foreach",
            Kind::Val { .. } => "val",
            Kind::Tree(_) => "tree",
            Kind::Vcopy(_) => "vcopy",
            Kind::Tcopy(_) => "tcopy",
            Kind::If { .. } => "if",
        }
    }

    fn binds(&self) -> bool {
        matches!(self, Kind::Val { .. } | Kind::Tree(_))
    }
}

/// A statement of a configuration together with its context, if active.
/// Only `cons` and `tree` statements have configuration children.
#[derive(Clone, Debug)]
pub struct CNode {
    pub kind: Kind,
    pub ctx: Option<Arc<Context>>,
    pub body: Vec<CNode>,
    // non-cons statements in this subtree, self included
    pending: usize,
}

impl CNode {
    pub fn new(kind: Kind, body: Vec<CNode>) -> CNode {
        let mut n = CNode { kind, ctx: None, body, pending: 0 };
        n.recount();
        n
    }

    pub(crate) fn recount(&mut self) {
        let own = usize::from(!matches!(self.kind, Kind::Cons(_)));
        self.pending = own + self.body.iter().map(|c| c.pending).sum::<usize>();
    }

    pub fn from_statement(s: &Statement) -> CNode {
        match s {
            Statement::Cons { label, body } => CNode::new(Kind::Cons(label.clone()), from_template(body)),
            Statement::Apply { expr, mode } => {
                CNode::new(Kind::Apply { expr: expr.clone(), mode: mode.clone() }, vec![])
            }
            Statement::Call(r) => CNode::new(Kind::Call(r.clone()), vec![]),
            Statement::Foreach { expr, body } => {
                CNode::new(Kind::Foreach { expr: expr.clone(), body: Arc::new(body.clone()) }, vec![])
            }
            Statement::Val { var, expr } => CNode::new(Kind::Val { var: var.clone(), expr: expr.clone() }, vec![]),
            Statement::Tree { var, body } => CNode::new(Kind::Tree(var.clone()), from_template(body)),
            Statement::Vcopy(e) => CNode::new(Kind::Vcopy(e.clone()), vec![]),
            Statement::Tcopy(y) => CNode::new(Kind::Tcopy(y.clone()), vec![]),
            Statement::If { test, then, els } => CNode::new(
                Kind::If { test: test.clone(), then: Arc::new(then.clone()), els: Arc::new(els.clone()) },
                vec![],
            ),
        }
    }

    pub fn to_statement(&self) -> Statement {
        let body = || self.body.iter().map(CNode::to_statement).collect();
        match &self.kind {
            Kind::Cons(l) => Statement::Cons { label: l.clone(), body: body() },
            Kind::Apply { expr, mode } => Statement::Apply { expr: expr.clone(), mode: mode.clone() },
            Kind::Call(r) => Statement::Call(r.clone()),
            Kind::Foreach { expr, body } => Statement::Foreach { expr: expr.clone(), body: (**body).clone() },
            Kind::Val { var, expr } => Statement::Val { var: var.clone(), expr: expr.clone() },
            Kind::Tree(y) => Statement::Tree { var: y.clone(), body: body() },
            Kind::Vcopy(e) => Statement::Vcopy(e.clone()),
            Kind::Tcopy(y) => Statement::Tcopy(y.clone()),
            Kind::If { test, then, els } => {
                Statement::If { test: test.clone(), then: (**then).clone(), els: (**els).clone() }
            }
        }
    }

    pub fn is_active(&self) -> bool {
        self.ctx.is_some()
    }

    pub fn is_terminal(&self) -> bool {
        self.pending == 0
    }
}

pub fn from_template(m: &[Statement]) -> Vec<CNode> {
    m.iter().map(CNode::from_statement).collect()
}

/// Gives context `c` to every statement of `nodes` that has none, except
/// statements in the scope of a `val`/`tree` and bodies of `foreach`.
/// `cons` is transparent. Statements that already carry a context keep it,
/// together with everything below them.
pub fn activate(nodes: &mut [CNode], c: &Arc<Context>) {
    for n in nodes {
        if let Kind::Cons(_) = n.kind {
            activate(&mut n.body, c);
            continue;
        }
        if n.ctx.is_none() {
            n.ctx = Some(c.clone());
            if let Kind::Tree(_) = n.kind {
                activate(&mut n.body, c);
            }
        }
        if n.kind.binds() {
            return;
        }
    }
}

/// `init(M, C)`
pub fn init(m: &[Statement], c: &Arc<Context>) -> Vec<CNode> {
    let mut nodes = from_template(m);
    activate(&mut nodes, c);
    nodes
}

/// Index one past the maximal run of inactive right siblings of `i`.
pub fn updateset_end(list: &[CNode], i: usize) -> usize {
    let mut j = i + 1;
    while j < list.len() && !list[j].is_active() {
        j += 1;
    }
    j
}

/// The terminal template describing a forest.
pub fn ttemp(f: &DataForest) -> Vec<CNode> {
    fn go(t: &DataTree, n: crate::tree::NodeId) -> CNode {
        CNode::new(Kind::Cons(t.label(n).clone()), t.children(n).map(|c| go(t, c)).collect())
    }
    f.0.iter().map(|t| go(t, t.root())).collect()
}

/// The forest denoted by a terminal template, under a fresh `doc` root.
pub fn denoted_tree(nodes: &[CNode]) -> Option<DataTree> {
    fn go(b: &mut TreeBuilder, n: &CNode) -> Option<()> {
        let Kind::Cons(l) = &n.kind else { return None };
        b.open(l.clone());
        for c in &n.body {
            go(b, c)?;
        }
        b.close();
        Some(())
    }
    let mut b = TreeBuilder::new();
    b.open(Label::doc());
    for n in nodes {
        go(&mut b, n)?;
    }
    b.close();
    Some(b.finish())
}

/// Rewrites active `if` statements in `list` (and below) in preorder
/// until none remain.
pub fn if_normalize_list(list: &mut Vec<CNode>, mode: EvalMode) -> Result<(), (Vec<usize>, EvalError)> {
    let mut i = 0;
    while i < list.len() {
        if let (Kind::If { test, then, els }, Some(c)) = (&list[i].kind, &list[i].ctx) {
            let truth = eval(test, c, mode).map_err(|e| (vec![i], e))?;
            let branch = if truth.is_empty() { els } else { then };
            let replacement = init(branch, c);
            list.splice(i..=i, replacement);
            continue;
        }
        let n = &mut list[i];
        if !n.body.is_empty() {
            if_normalize_list(&mut n.body, mode).map_err(|(mut p, e)| {
                p.insert(0, i);
                (p, e)
            })?;
            n.recount();
        }
        i += 1;
    }
    Ok(())
}

/// Paths of active `if` statements, in preorder.
pub fn active_ifs(list: &[CNode]) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    fn go(list: &[CNode], prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        for (i, n) in list.iter().enumerate() {
            prefix.push(i);
            if matches!(n.kind, Kind::If { .. }) && n.is_active() {
                out.push(prefix.clone());
            }
            go(&n.body, prefix, out);
            prefix.pop();
        }
    }
    go(list, &mut Vec::new(), &mut out);
    out
}

/// Rewrites the single active `if` at `path`.
pub fn rewrite_if_at(list: &mut Vec<CNode>, path: &[usize], mode: EvalMode) -> Result<(), EvalError> {
    let (&last, parent) = path.split_last().expect("nonempty path");
    let holder = parent_list(list, parent);
    let n = &holder[last];
    let (Kind::If { test, then, els }, Some(c)) = (&n.kind, &n.ctx) else {
        panic!("no active if at {path:?}");
    };
    let truth = eval(test, c, mode)?;
    let replacement = init(if truth.is_empty() { els } else { then }, c);
    holder.splice(last..=last, replacement);
    recount_path(list, parent);
    Ok(())
}

pub(crate) fn parent_list<'a>(list: &'a mut Vec<CNode>, parent: &[usize]) -> &'a mut Vec<CNode> {
    let mut cur = list;
    for &i in parent {
        cur = &mut cur[i].body;
    }
    cur
}

/// Refreshes the cached counts of every node on `path`, deepest first.
pub(crate) fn recount_path(list: &mut [CNode], path: &[usize]) {
    if let Some((&first, rest)) = path.split_first() {
        recount_path(&mut list[first].body, rest);
        list[first].recount();
    }
}

pub fn node_at<'a>(list: &'a [CNode], path: &[usize]) -> Option<&'a CNode> {
    let (&first, rest) = path.split_first()?;
    let mut cur = list.get(first)?;
    for &i in rest {
        cur = cur.body.get(i)?;
    }
    Some(cur)
}

/// Paths of every schedulable statement in preorder: active, not `if`,
/// and for `tree` only once its body is terminal.
pub fn enabled(list: &[CNode]) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    fn go(list: &[CNode], prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        for (i, n) in list.iter().enumerate() {
            if n.is_terminal() {
                continue;
            }
            prefix.push(i);
            if n.is_active() && is_schedulable(n) {
                out.push(prefix.clone());
            }
            go(&n.body, prefix, out);
            prefix.pop();
        }
    }
    go(list, &mut Vec::new(), &mut out);
    out
}

fn is_schedulable(n: &CNode) -> bool {
    match n.kind {
        Kind::Cons(_) | Kind::If { .. } => false,
        Kind::Tree(_) => n.body.iter().all(CNode::is_terminal),
        _ => true,
    }
}

/// The first schedulable statement in preorder.
pub fn first_enabled(list: &[CNode]) -> Option<Vec<usize>> {
    fn go(list: &[CNode], prefix: &mut Vec<usize>) -> bool {
        for (i, n) in list.iter().enumerate() {
            if n.is_terminal() {
                continue;
            }
            prefix.push(i);
            if n.is_active() && is_schedulable(n) {
                return true;
            }
            if go(&n.body, prefix) {
                return true;
            }
            prefix.pop();
        }
        false
    }
    let mut p = Vec::new();
    go(list, &mut p).then_some(p)
}

/// Erases contexts: the configuration as a plain template.
pub fn to_template(list: &[CNode]) -> Template {
    list.iter().map(CNode::to_statement).collect()
}
