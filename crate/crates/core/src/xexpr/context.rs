use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::tree::{DataTree, NodeId};
use crate::Name;

/// The reserved tree variable holding the input tree.
pub const INPUT: &str = "Input";

/// One entry of a value: a node or a counter.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Item {
    Node(NodeId),
    Counter(u32),
}

impl Item {
    pub fn as_node(self) -> Option<NodeId> {
        match self {
            Item::Node(n) => Some(n),
            Item::Counter(_) => None,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum ExprType {
    Nodes,
    Mixed,
}

/// A finite sequence of nodes and counters.
#[derive(Clone, PartialEq, Eq, Hash, Default, Debug)]
pub struct Value(pub Vec<Item>);

impl Value {
    pub fn empty() -> Self {
        Value(Vec::new())
    }

    pub fn truth(b: bool) -> Self {
        if b {
            Value(vec![Item::Counter(1)])
        } else {
            Value::empty()
        }
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn items(&self) -> &[Item] {
        &self.0
    }

    /// `nodes` iff every item is a node (the empty value included).
    pub fn value_type(&self) -> ExprType {
        if self.0.iter().all(|i| matches!(i, Item::Node(_))) {
            ExprType::Nodes
        } else {
            ExprType::Mixed
        }
    }

    pub fn nodes(&self) -> Option<Vec<NodeId>> {
        self.0.iter().map(|i| i.as_node()).collect()
    }
}

/// Tree-variable bindings, `Input` first, the rest in binding order.
#[derive(Clone, Debug)]
pub struct Store {
    bindings: Vec<(Name, DataTree)>,
}

impl Store {
    pub fn new(input: DataTree) -> Self {
        Store { bindings: vec![(Name::from(INPUT), input)] }
    }

    pub fn input(&self) -> &DataTree {
        &self.bindings[0].1
    }

    pub fn get(&self, var: &str) -> Option<&DataTree> {
        self.bindings.iter().find(|(v, _)| &**v == var).map(|(_, t)| t)
    }

    pub fn bindings(&self) -> &[(Name, DataTree)] {
        &self.bindings
    }

    /// Rebinding an existing variable replaces its tree in place.
    pub fn with_binding(&self, var: Name, tree: DataTree) -> Store {
        let mut bindings = self.bindings.clone();
        match bindings.iter_mut().find(|(v, _)| *v == var) {
            Some(slot) => slot.1 = tree,
            None => bindings.push((var, tree)),
        }
        Store { bindings }
    }

    pub fn node_count(&self) -> usize {
        self.bindings.iter().map(|(_, t)| t.len()).sum()
    }

    /// Index of the binding whose tree contains `n`.
    pub fn tree_of(&self, n: NodeId) -> Option<(usize, &DataTree)> {
        self.bindings.iter().enumerate().find(|(_, (_, t))| t.contains(n)).map(|(i, (_, t))| (i, t))
    }

    pub fn only_input(&self) -> bool {
        self.bindings.len() == 1
    }

    /// Same variables bound to the same trees.
    pub fn same_as(&self, other: &Store) -> bool {
        self.bindings.len() == other.bindings.len()
            && self
                .bindings
                .iter()
                .zip(&other.bindings)
                .all(|((v1, t1), (v2, t2))| v1 == v2 && t1.root() == t2.root() && t1.len() == t2.len())
    }
}

/// Value-variable bindings.
#[derive(Clone, PartialEq, Eq, Hash, Default, Debug)]
pub struct Env(pub BTreeMap<Name, Value>);

impl Env {
    pub fn get(&self, var: &str) -> Option<&Value> {
        self.0.get(var)
    }

    pub fn with(&self, var: Name, v: Value) -> Env {
        let mut m = self.0.clone();
        m.insert(var, v);
        Env(m)
    }
}

/// Context item, position, and size.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct Triple {
    pub item: Item,
    pub position: u32,
    pub size: u32,
}

impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.item {
            Item::Node(n) => write!(f, "n{}", n.0)?,
            Item::Counter(c) => write!(f, "#{c}")?,
        }
        write!(f, ",{},{}", self.position, self.size)
    }
}

/// Store, environment, and context triple.
#[derive(Clone, Debug)]
pub struct Context {
    pub store: Arc<Store>,
    pub env: Arc<Env>,
    pub triple: Triple,
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("context is not input-only: {0}")]
pub struct ProjectionError(pub String);

impl Context {
    /// `({(Input, t)}, ∅, (root, 1, 1))`
    pub fn initial(t: DataTree) -> Context {
        let root = t.root();
        Context {
            store: Arc::new(Store::new(t)),
            env: Arc::new(Env::default()),
            triple: Triple { item: Item::Node(root), position: 1, size: 1 },
        }
    }

    pub fn with_value(&self, var: Name, v: Value) -> Context {
        Context { store: self.store.clone(), env: Arc::new(self.env.with(var, v)), triple: self.triple }
    }

    pub fn with_tree(&self, var: Name, t: DataTree) -> Context {
        Context { store: Arc::new(self.store.with_binding(var, t)), env: self.env.clone(), triple: self.triple }
    }

    pub fn with_triple(&self, triple: Triple) -> Context {
        Context { store: self.store.clone(), env: self.env.clone(), triple }
    }

    pub fn input(&self) -> &DataTree {
        self.store.input()
    }

    fn item_over_input(&self, item: Item) -> bool {
        match item {
            Item::Node(n) => self.input().contains(n),
            Item::Counter(c) => c >= 1 && c as usize <= self.input().len(),
        }
    }

    /// Whether every value and the triple only mention input nodes and
    /// counters over the input tree.
    pub fn is_input_only(&self) -> bool {
        self.env.0.values().all(|v| v.0.iter().all(|&i| self.item_over_input(i)))
            && self.item_over_input(self.triple.item)
            && self.item_over_input(Item::Counter(self.triple.position))
            && self.item_over_input(Item::Counter(self.triple.size))
    }

    /// Structural equality: same store bindings, environment, and triple.
    pub fn same_as(&self, other: &Context) -> bool {
        self.triple == other.triple && self.env == other.env && self.store.same_as(&other.store)
    }
}

/// The context with all temporary trees removed from its store.
pub fn project_input_only(c: &Context) -> Result<Context, ProjectionError> {
    if !c.is_input_only() {
        return Err(ProjectionError(format!("triple ({}) or environment mentions non-input items", c.triple)));
    }
    if c.store.only_input() {
        return Ok(c.clone());
    }
    Ok(Context { store: Arc::new(Store::new(c.input().clone())), env: c.env.clone(), triple: c.triple })
}
