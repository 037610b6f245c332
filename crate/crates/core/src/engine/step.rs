use std::collections::HashMap;
use std::sync::Arc;

use thiserror::Error;

use super::config::{activate, denoted_tree, init, parent_list, recount_path, ttemp, updateset_end, CNode, Kind};
use crate::syntax::{Program, Statement, Template};
use crate::tree::{choproot, DataForest, DataTree};
use crate::xexpr::{eval, matches_node, Context, EvalError, EvalMode, Item, Triple, XExpr};
use crate::Name;

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum StepError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("{0} selected a counter where nodes are required")]
    CounterSelected(&'static str),
    #[error("tree variable `{0}` is not defined")]
    UnboundTree(String),
    #[error("no rule named `{0}`")]
    UnknownRule(String),
}

/// What `ruletoapply` picked for one node.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Chosen {
    Rule(usize),
    Default,
}

/// A program prepared for execution.
pub struct Engine {
    pub program: Program,
    pub mode: EvalMode,
    by_name: HashMap<Name, usize>,
    default_body: Template,
}

impl Engine {
    pub fn new(program: Program, mode: EvalMode) -> Engine {
        Engine {
            by_name: program.index(),
            program,
            mode,
            default_body: vec![Statement::Apply { expr: XExpr::Child, mode: None }],
        }
    }

    pub fn rule_body(&self, c: &Chosen) -> &Template {
        match c {
            Chosen::Rule(i) => &self.program.rules[*i].body,
            Chosen::Default => &self.default_body,
        }
    }

    pub fn rule_name(&self, c: &Chosen) -> &str {
        match c {
            Chosen::Rule(i) => &self.program.rules[*i].name,
            Chosen::Default => "#default",
        }
    }

    pub fn rule_index(&self, name: &str) -> Option<usize> {
        self.by_name.get(name).copied()
    }

    /// First rule in textual order, among those with mode `mode`, whose
    /// match expression selects `n` in context `c`.
    pub fn ruletoapply(&self, c: &Context, n: crate::tree::NodeId, mode: Option<&str>) -> Result<Chosen, EvalError> {
        for (i, r) in self.program.rules.iter().enumerate() {
            if r.mode.as_deref() != mode {
                continue;
            }
            if matches_node(&r.matches, c, self.mode, n)? {
                return Ok(Chosen::Rule(i));
            }
        }
        Ok(Chosen::Default)
    }
}

/// Per-step record for tracing.
#[derive(Clone, Debug)]
pub struct StepInfo {
    pub kind: &'static str,
    pub path: Vec<usize>,
    pub rules: Vec<String>,
    pub triple: Triple,
}

fn node_items(v: &crate::xexpr::Value, what: &'static str) -> Result<Vec<crate::tree::NodeId>, StepError> {
    v.nodes().ok_or(StepError::CounterSelected(what))
}

/// Fires the enabled statement at `path` and if-normalizes what changed.
pub fn step(engine: &Engine, list: &mut Vec<CNode>, path: &[usize]) -> Result<StepInfo, (Vec<usize>, StepError)> {
    let at = |e: StepError| (path.to_vec(), e);
    let (&last, parent) = path.split_last().expect("nonempty path");
    let holder = parent_list(list, parent);
    let s = &holder[last];
    let c = s.ctx.clone().expect("step on an inactive statement");
    let mut info = StepInfo { kind: s.kind.keyword(), path: path.to_vec(), rules: Vec::new(), triple: c.triple };
    let mode = engine.mode;
    match s.kind.clone() {
        Kind::Apply { expr, mode: m } => {
            let v = eval(&expr, &c, mode).map_err(|e| at(e.into()))?;
            let nodes = node_items(&v, "apply").map_err(at)?;
            let k = nodes.len() as u32;
            let mut out = Vec::new();
            for (i, n) in nodes.into_iter().enumerate() {
                let chosen = engine.ruletoapply(&c, n, m.as_deref()).map_err(|e| at(e.into()))?;
                info.rules.push(engine.rule_name(&chosen).to_string());
                let ci = Arc::new(c.with_triple(Triple { item: Item::Node(n), position: i as u32 + 1, size: k }));
                out.extend(init(engine.rule_body(&chosen), &ci));
            }
            holder.splice(last..=last, out);
        }
        Kind::Call(name) => {
            let r = engine.rule_index(&name).ok_or_else(|| at(StepError::UnknownRule(name.to_string())))?;
            info.rules.push(name.to_string());
            let out = init(&engine.program.rules[r].body, &c);
            holder.splice(last..=last, out);
        }
        Kind::Foreach { expr, body } => {
            let v = eval(&expr, &c, mode).map_err(|e| at(e.into()))?;
            let k = v.len() as u32;
            let mut out = Vec::new();
            for (i, &z) in v.items().iter().enumerate() {
                let ci = Arc::new(c.with_triple(Triple { item: z, position: i as u32 + 1, size: k }));
                out.extend(init(&body, &ci));
            }
            holder.splice(last..=last, out);
        }
        Kind::Val { var, expr } => {
            let v = eval(&expr, &c, mode).map_err(|e| at(e.into()))?;
            let c2 = Arc::new(c.with_value(var, v));
            rebind(holder, last, &c2);
        }
        Kind::Tree(var) => {
            let t = denoted_tree(&s.body).expect("tree fires only with a terminal body");
            let c2 = Arc::new(c.with_tree(var, t));
            rebind(holder, last, &c2);
        }
        Kind::Vcopy(expr) => {
            let v = eval(&expr, &c, mode).map_err(|e| at(e.into()))?;
            let nodes = node_items(&v, "vcopy").map_err(at)?;
            let mut trees = Vec::with_capacity(nodes.len());
            for n in nodes {
                let (_, t) = c.store.tree_of(n).ok_or_else(|| {
                    at(StepError::Eval(EvalError {
                        expr: expr.to_string(),
                        cause: crate::xexpr::EvalCause::DanglingNode,
                    }))
                })?;
                trees.push(t.subtree_view(n));
            }
            holder.splice(last..=last, ttemp(&DataForest(trees)));
        }
        Kind::Tcopy(y) => {
            let t: &DataTree = c.store.get(&y).ok_or_else(|| at(StepError::UnboundTree(y.to_string())))?;
            holder.splice(last..=last, ttemp(&choproot(t)));
        }
        Kind::Cons(_) | Kind::If { .. } => panic!("{} is never scheduled", s.kind.keyword()),
    }
    super::config::if_normalize_list(holder, mode).map_err(|(mut p, e)| {
        let mut full = parent.to_vec();
        full.append(&mut p);
        (full, StepError::Eval(e))
    })?;
    recount_path(list, parent);
    Ok(info)
}

/// Removes the binder at `i` and activates its updateset under `c`.
fn rebind(holder: &mut Vec<CNode>, i: usize, c: &Arc<Context>) {
    let end = updateset_end(holder, i);
    activate(&mut holder[i + 1..end], c);
    holder.remove(i);
}
