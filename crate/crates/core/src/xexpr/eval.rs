use thiserror::Error;

use super::{Context, EvalMode, Item, Value, XExpr};
use crate::tree::{DataTree, NodeId};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EvalCause {
    ContextNotNode,
    UnboundValueVar(String),
    UnboundTreeVar(String),
    CounterOutOfRange,
    NotSingleCounter,
    NotSingleton,
    NotNodes,
    DanglingNode,
}

impl std::fmt::Display for EvalCause {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EvalCause::ContextNotNode => f.write_str("context item is not a node"),
            EvalCause::UnboundValueVar(x) => write!(f, "value variable `{x}` is unbound"),
            EvalCause::UnboundTreeVar(y) => write!(f, "tree variable `{y}` is unbound"),
            EvalCause::CounterOutOfRange => f.write_str("counter out of range"),
            EvalCause::NotSingleCounter => f.write_str("operand is not a single counter"),
            EvalCause::NotSingleton => f.write_str("operand of `=` is not a singleton"),
            EvalCause::NotNodes => f.write_str("operand is not a node sequence"),
            EvalCause::DanglingNode => f.write_str("node does not occur in the store"),
        }
    }
}

/// Evaluation is undefined for `expr` in the given context.
#[derive(Clone, Debug, Error, PartialEq, Eq)]
#[error("evaluation of `{expr}` undefined: {cause}")]
pub struct EvalError {
    pub expr: String,
    pub cause: EvalCause,
}

fn fail<T>(e: &XExpr, cause: EvalCause) -> Result<T, EvalError> {
    Err(EvalError { expr: e.to_string(), cause })
}

fn counter_bound(ctx: &Context, mode: EvalMode) -> u32 {
    match mode {
        EvalMode::V1 => ctx.input().len() as u32,
        EvalMode::V2 => ctx.store.node_count() as u32,
    }
}

fn context_node<'c>(e: &XExpr, ctx: &'c Context) -> Result<(NodeId, &'c DataTree), EvalError> {
    match ctx.triple.item {
        Item::Node(n) => match ctx.store.tree_of(n) {
            Some((_, t)) => Ok((n, t)),
            None => fail(e, EvalCause::DanglingNode),
        },
        Item::Counter(_) => fail(e, EvalCause::ContextNotNode),
    }
}

fn single_counter(e: &XExpr, ctx: &Context, x: &str) -> Result<u32, EvalError> {
    match ctx.env.get(x) {
        None => fail(e, EvalCause::UnboundValueVar(x.to_string())),
        Some(v) => match v.items() {
            [Item::Counter(c)] => Ok(*c),
            _ => fail(e, EvalCause::NotSingleCounter),
        },
    }
}

/// Sort key realizing document order across the store.
fn doc_key(e: &XExpr, ctx: &Context, n: NodeId) -> Result<(usize, NodeId), EvalError> {
    match ctx.store.tree_of(n) {
        Some((i, _)) => Ok((i, n)),
        None => fail(e, EvalCause::DanglingNode),
    }
}

fn node_set(e: &XExpr, ctx: &Context, v: Value) -> Result<Vec<(usize, NodeId)>, EvalError> {
    let Some(nodes) = v.nodes() else {
        return fail(e, EvalCause::NotNodes);
    };
    let mut keys = nodes.into_iter().map(|n| doc_key(e, ctx, n)).collect::<Result<Vec<_>, _>>()?;
    keys.sort_unstable();
    keys.dedup();
    Ok(keys)
}

fn to_value(keys: impl IntoIterator<Item = (usize, NodeId)>) -> Value {
    Value(keys.into_iter().map(|(_, n)| Item::Node(n)).collect())
}

/// Evaluates `e` in `ctx`. Truth-valued forms yield `(1)` for true and `()`
/// for false.
pub fn eval(e: &XExpr, ctx: &Context, mode: EvalMode) -> Result<Value, EvalError> {
    use XExpr::*;
    let node = |n: Option<NodeId>| Value(n.map(Item::Node).into_iter().collect());
    Ok(match e {
        Root => Value(vec![Item::Node(ctx.input().root())]),
        Child => {
            let (n, t) = context_node(e, ctx)?;
            Value(t.children(n).map(Item::Node).collect())
        }
        AllNodes => match mode {
            EvalMode::V1 => Value(ctx.input().nodes().map(Item::Node).collect()),
            EvalMode::V2 => Value(ctx.store.bindings().iter().flat_map(|(_, t)| t.nodes().map(Item::Node)).collect()),
        },
        FirstChild => {
            let (n, t) = context_node(e, ctx)?;
            node(t.children(n).next())
        }
        NextSibling => {
            let (n, t) = context_node(e, ctx)?;
            node(t.next_sibling(n))
        }
        PrevSibling => {
            let (n, t) = context_node(e, ctx)?;
            node(t.prev_sibling(n))
        }
        ContextItem => Value(vec![ctx.triple.item]),
        Position => Value(vec![Item::Counter(ctx.triple.position)]),
        Empty => Value::empty(),
        One => Value(vec![Item::Counter(1)]),
        Var(x) => match ctx.env.get(x) {
            Some(v) => v.clone(),
            None => return fail(e, EvalCause::UnboundValueVar(x.to_string())),
        },
        TreeRoot(y) => match ctx.store.get(y) {
            Some(t) => Value(vec![Item::Node(t.root())]),
            None => return fail(e, EvalCause::UnboundTreeVar(y.to_string())),
        },
        Inc(x) => {
            let c = single_counter(e, ctx, x)?;
            if c >= counter_bound(ctx, mode) {
                return fail(e, EvalCause::CounterOutOfRange);
            }
            Value(vec![Item::Counter(c + 1)])
        }
        Dec(x) => {
            let c = single_counter(e, ctx, x)?;
            if c <= 1 {
                return fail(e, EvalCause::CounterOutOfRange);
            }
            Value(vec![Item::Counter(c - 1)])
        }
        Eq(a, b) => {
            let va = eval(a, ctx, mode)?;
            let vb = eval(b, ctx, mode)?;
            match (va.items(), vb.items()) {
                ([x], [y]) => Value::truth(x == y),
                _ => return fail(e, EvalCause::NotSingleton),
            }
        }
        NameIs(l) => {
            let (n, t) = context_node(e, ctx)?;
            Value::truth(t.label(n) == l)
        }
        Union(a, b) => {
            let mut keys = node_set(e, ctx, eval(a, ctx, mode)?)?;
            keys.extend(node_set(e, ctx, eval(b, ctx, mode)?)?);
            keys.sort_unstable();
            keys.dedup();
            to_value(keys)
        }
        Intersect(a, b) => {
            let ka = node_set(e, ctx, eval(a, ctx, mode)?)?;
            let kb = node_set(e, ctx, eval(b, ctx, mode)?)?;
            to_value(ka.into_iter().filter(|k| kb.binary_search(k).is_ok()))
        }
        Except(a, b) => {
            let ka = node_set(e, ctx, eval(a, ctx, mode)?)?;
            let kb = node_set(e, ctx, eval(b, ctx, mode)?)?;
            to_value(ka.into_iter().filter(|k| kb.binary_search(k).is_err()))
        }
    })
}

/// `n ∈ eval(e, ctx)`, without materializing `//*`.
pub fn matches_node(e: &XExpr, ctx: &Context, mode: EvalMode, n: NodeId) -> Result<bool, EvalError> {
    match e {
        XExpr::AllNodes => Ok(match mode {
            EvalMode::V1 => ctx.input().contains(n),
            EvalMode::V2 => ctx.store.tree_of(n).is_some(),
        }),
        _ => Ok(eval(e, ctx, mode)?.items().contains(&Item::Node(n))),
    }
}
