//! Memoized evaluation of input-only programs into a DAG of shared
//! result fragments, with nontermination detection.

mod format;

use std::collections::{HashMap, HashSet, VecDeque};
use std::sync::Arc;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::engine::{Chosen, Engine, StepError};
use crate::syntax::{classify_version, lift_bodies, Program, Statement, Version};
use crate::tree::{DataTree, Label, NodeId, TreeBuilder};
use crate::xexpr::{eval, Context, Env, EvalCause, EvalError, EvalMode, Item, Store, Triple, Value, XExpr, INPUT};
use crate::Name;

pub use format::{parse_dag, DagParseError};

/// A fragment of a result: a labeled node, a link to the forest of another
/// entry, or a link to an input subtree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DNode {
    Node(Label, Vec<DNode>),
    Link(usize),
    Input(NodeId),
}

#[derive(Clone, Debug)]
pub struct DagEntry {
    pub rule: String,
    pub ctx: usize,
    pub content: Vec<DNode>,
}

#[derive(Clone, Debug)]
pub struct Dag {
    pub entries: Vec<DagEntry>,
    pub root: usize,
    pub input: DataTree,
    pub contexts: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EntryKey {
    pub rule: String,
    pub ctx: usize,
    /// The context with its store erased: environment and triple.
    pub projection: String,
}

impl std::fmt::Display for EntryKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}@{}", self.rule, self.ctx)
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum DagError {
    #[error("program reads temporary trees; only input-only programs can be evaluated as a dag")]
    NotV1,
    #[error("nontermination: {}", cycle.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(" -> "))]
    Nontermination { cycle: Vec<EntryKey> },
    #[error("in {entry}: {error}")]
    Eval { entry: EntryKey, error: StepError },
    #[error("more than {0} entries")]
    Budget(usize),
}

/// Unfolding refuses trees larger than this unless told otherwise.
pub const DEFAULT_MAX_NODES: usize = 1_000_000;

#[derive(Clone, Copy, Debug)]
pub struct DagLimits {
    pub max_entries: usize,
}

impl Default for DagLimits {
    fn default() -> Self {
        DagLimits { max_entries: 200_000 }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
enum Target {
    Root,
    Rule(usize),
    Default,
}

/// A context whose temporary trees are named by the entries computing them.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
struct SymCtx {
    env: Arc<Env>,
    triple: Triple,
    store: Vec<(Name, usize)>,
}

impl SymCtx {
    fn with_triple(&self, triple: Triple) -> SymCtx {
        SymCtx { triple, ..self.clone() }
    }
}

struct EntryState {
    target: Target,
    ctx: usize,
    class: (Target, usize),
    content: Vec<DNode>,
    out: Vec<usize>,
    inc: Vec<usize>,
}

struct Builder {
    engine: Engine,
    input: DataTree,
    input_store: Arc<Store>,
    limits: DagLimits,
    ctxs: HashMap<SymCtx, usize>,
    ctx_list: Vec<SymCtx>,
    projections: HashMap<(Arc<Env>, Triple), usize>,
    entries: Vec<EntryState>,
    by_key: HashMap<(Target, usize), usize>,
    members: HashMap<(Target, usize), Vec<usize>>,
    edges: HashSet<(usize, usize)>,
    queue: VecDeque<usize>,
    root_body: Vec<Statement>,
}

impl Builder {
    fn rule_name(&self, t: Target) -> String {
        match t {
            Target::Root => "#root".into(),
            Target::Rule(i) => self.engine.program.rules[i].name.to_string(),
            Target::Default => "#default".into(),
        }
    }

    fn key(&self, e: usize) -> EntryKey {
        let c = &self.ctx_list[self.entries[e].ctx];
        let env: Vec<String> = c.env.0.iter().map(|(x, v)| format!("{x}={v:?}")).collect();
        EntryKey {
            rule: self.rule_name(self.entries[e].target),
            ctx: self.entries[e].ctx,
            projection: format!("({}) [{}]", c.triple, env.join(", ")),
        }
    }

    fn context(&self, c: &SymCtx) -> Context {
        Context { store: self.input_store.clone(), env: c.env.clone(), triple: c.triple }
    }

    fn intern(&mut self, c: SymCtx) -> (usize, usize) {
        let proj_key = (c.env.clone(), c.triple);
        let next = self.projections.len();
        let proj = *self.projections.entry(proj_key).or_insert(next);
        if let Some(&id) = self.ctxs.get(&c) {
            return (id, proj);
        }
        let id = self.ctx_list.len();
        self.ctxs.insert(c.clone(), id);
        self.ctx_list.push(c);
        (id, proj)
    }

    fn entry(&mut self, target: Target, c: SymCtx) -> Result<usize, DagError> {
        let (ctx, proj) = self.intern(c);
        if let Some(&e) = self.by_key.get(&(target, ctx)) {
            return Ok(e);
        }
        if self.entries.len() >= self.limits.max_entries {
            return Err(DagError::Budget(self.limits.max_entries));
        }
        let e = self.entries.len();
        self.entries.push(EntryState {
            target,
            ctx,
            class: (target, proj),
            content: Vec::new(),
            out: Vec::new(),
            inc: Vec::new(),
        });
        self.by_key.insert((target, ctx), e);
        self.members.entry((target, proj)).or_default().push(e);
        self.queue.push_back(e);
        Ok(e)
    }

    /// Records that computing `src` computes `dst`, and rejects the edge if
    /// it closes a path between two entries of the same rule whose contexts
    /// agree once stores are erased.
    fn depend(&mut self, src: usize, dst: usize) -> Result<(), DagError> {
        if !self.edges.insert((src, dst)) {
            return Ok(());
        }
        self.entries[src].out.push(dst);
        self.entries[dst].inc.push(src);
        if let Some(cycle) = self.find_cycle(src, dst) {
            return Err(DagError::Nontermination { cycle: cycle.into_iter().map(|e| self.key(e)).collect() });
        }
        Ok(())
    }

    fn search(&self, from: usize, forward: bool) -> HashMap<usize, Option<usize>> {
        let mut parent = HashMap::from([(from, None)]);
        let mut queue = VecDeque::from([from]);
        while let Some(x) = queue.pop_front() {
            let next = if forward { &self.entries[x].out } else { &self.entries[x].inc };
            for &y in next {
                if let std::collections::hash_map::Entry::Vacant(v) = parent.entry(y) {
                    v.insert(Some(x));
                    queue.push_back(y);
                }
            }
        }
        parent
    }

    fn find_cycle(&self, a: usize, b: usize) -> Option<Vec<usize>> {
        let fresh = self.entries[b].out.is_empty();
        if fresh {
            // only b itself is reachable from b
            let others = &self.members[&self.entries[b].class];
            if others.len() == 1 && b != a {
                return None;
            }
        }
        let back = self.search(a, false);
        let fwd = if fresh { HashMap::from([(b, None)]) } else { self.search(b, true) };
        let mut order: Vec<usize> = fwd.keys().copied().collect();
        order.sort_unstable();
        for y in order {
            for &x in &self.members[&self.entries[y].class] {
                if !back.contains_key(&x) {
                    continue;
                }
                // x .. a, then b .. y
                let mut path = Vec::new();
                let mut cur = Some(x);
                while let Some(c) = cur {
                    path.push(c);
                    cur = back[&c];
                }
                let mut tail = Vec::new();
                let mut cur = Some(y);
                while let Some(c) = cur {
                    tail.push(c);
                    cur = fwd[&c];
                }
                tail.reverse();
                path.extend(tail);
                return Some(path);
            }
        }
        None
    }

    fn fail(&self, src: usize, error: StepError) -> DagError {
        DagError::Eval { entry: self.key(src), error }
    }

    fn eval(&self, src: usize, e: &XExpr, c: &SymCtx) -> Result<Value, DagError> {
        eval(e, &self.context(c), EvalMode::V1).map_err(|err| self.fail(src, err.into()))
    }

    fn nodes(&self, src: usize, v: &Value, what: &'static str) -> Result<Vec<NodeId>, DagError> {
        v.nodes().ok_or_else(|| self.fail(src, StepError::CounterSelected(what)))
    }

    fn template(&mut self, src: usize, m: &[Statement], c: &SymCtx, out: &mut Vec<DNode>) -> Result<(), DagError> {
        let mut c = c.clone();
        for s in m {
            match s {
                Statement::Cons { label, body } => {
                    let mut kids = Vec::new();
                    self.template(src, body, &c, &mut kids)?;
                    out.push(DNode::Node(label.clone(), kids));
                }
                Statement::Apply { expr, mode } => {
                    let v = self.eval(src, expr, &c)?;
                    let nodes = self.nodes(src, &v, "apply")?;
                    let k = nodes.len() as u32;
                    for (i, n) in nodes.into_iter().enumerate() {
                        let ci = c.with_triple(Triple { item: Item::Node(n), position: i as u32 + 1, size: k });
                        let chosen = self
                            .engine
                            .ruletoapply(&self.context(&ci), n, mode.as_deref())
                            .map_err(|err| self.fail(src, err.into()))?;
                        let target = match chosen {
                            Chosen::Rule(r) => Target::Rule(r),
                            Chosen::Default => Target::Default,
                        };
                        let dst = self.entry(target, ci)?;
                        self.depend(src, dst)?;
                        out.push(DNode::Link(dst));
                    }
                }
                Statement::Call(name) => {
                    let dst = self.call(src, name, &c)?;
                    out.push(DNode::Link(dst));
                }
                Statement::Foreach { expr, body } => {
                    let v = self.eval(src, expr, &c)?;
                    let k = v.len() as u32;
                    for (i, &z) in v.items().iter().enumerate() {
                        let ci = c.with_triple(Triple { item: z, position: i as u32 + 1, size: k });
                        self.template(src, body, &ci, out)?;
                    }
                }
                Statement::Val { var, expr } => {
                    let v = self.eval(src, expr, &c)?;
                    c.env = Arc::new(c.env.with(var.clone(), v));
                }
                Statement::Tree { var, body } => {
                    let [Statement::Call(name)] = body.as_slice() else {
                        unreachable!("tree bodies are lifted into calls")
                    };
                    let dst = self.call(src, name, &c)?;
                    match c.store.iter_mut().find(|(v, _)| v == var) {
                        Some(slot) => slot.1 = dst,
                        None => c.store.push((var.clone(), dst)),
                    }
                }
                Statement::Vcopy(expr) => {
                    let v = self.eval(src, expr, &c)?;
                    for n in self.nodes(src, &v, "vcopy")? {
                        if !self.input.contains(n) {
                            let cause = EvalCause::DanglingNode;
                            return Err(self.fail(src, EvalError { expr: expr.to_string(), cause }.into()));
                        }
                        out.push(DNode::Input(n));
                    }
                }
                Statement::Tcopy(y) => {
                    if &**y == INPUT {
                        out.extend(self.input.children(self.input.root()).map(DNode::Input));
                    } else {
                        match c.store.iter().find(|(v, _)| v == y) {
                            Some(&(_, e)) => out.push(DNode::Link(e)),
                            None => return Err(self.fail(src, StepError::UnboundTree(y.to_string()))),
                        }
                    }
                }
                Statement::If { test, then, els } => {
                    let truth = self.eval(src, test, &c)?;
                    self.template(src, if truth.is_empty() { els } else { then }, &c, out)?;
                }
            }
        }
        Ok(())
    }

    fn call(&mut self, src: usize, name: &str, c: &SymCtx) -> Result<usize, DagError> {
        let r = self.engine.rule_index(name).ok_or_else(|| self.fail(src, StepError::UnknownRule(name.into())))?;
        let dst = self.entry(Target::Rule(r), c.clone())?;
        self.depend(src, dst)?;
        Ok(dst)
    }

    fn body(&self, t: Target) -> Vec<Statement> {
        match t {
            Target::Root => self.root_body.clone(),
            Target::Rule(r) => self.engine.program.rules[r].body.clone(),
            Target::Default => self.engine.rule_body(&Chosen::Default).clone(),
        }
    }

    fn run(mut self) -> Result<Dag, DagError> {
        let initial = SymCtx {
            env: Arc::new(Env::default()),
            triple: Triple { item: Item::Node(self.input.root()), position: 1, size: 1 },
            store: Vec::new(),
        };
        let root = self.entry(Target::Root, initial)?;
        while let Some(e) = self.queue.pop_front() {
            let body = self.body(self.entries[e].target);
            let c = self.ctx_list[self.entries[e].ctx].clone();
            let mut out = Vec::new();
            self.template(e, &body, &c, &mut out)?;
            self.entries[e].content = out;
        }
        let entries = (0..self.entries.len())
            .map(|e| DagEntry {
                rule: self.rule_name(self.entries[e].target),
                ctx: self.entries[e].ctx,
                content: std::mem::take(&mut self.entries[e].content),
            })
            .collect();
        Ok(Dag { entries, root, input: self.input, contexts: self.ctxs.len() })
    }
}

/// Evaluates an input-only program into a dag whose unfolding is the
/// result tree.
pub fn evaluate_dag(p: &Program, t: &DataTree, limits: DagLimits) -> Result<Dag, DagError> {
    if classify_version(p) != Version::V1 {
        return Err(DagError::NotV1);
    }
    let lifted = lift_bodies(p);
    let b = Builder {
        engine: Engine::new(lifted, EvalMode::V1),
        input_store: Arc::new(Store::new(t.clone())),
        input: t.clone(),
        limits,
        ctxs: HashMap::new(),
        ctx_list: Vec::new(),
        projections: HashMap::new(),
        entries: Vec::new(),
        by_key: HashMap::new(),
        members: HashMap::new(),
        edges: HashSet::new(),
        queue: VecDeque::new(),
        root_body: vec![Statement::Apply { expr: XExpr::Root, mode: None }],
    };
    b.run()
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("unfolded tree exceeds {0} nodes")]
pub struct SizeLimitError(pub usize);

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DagStats {
    pub entries: usize,
    pub links: usize,
    pub contexts: usize,
    pub dag_nodes: usize,
    /// Nodes of the unfolded tree, `doc` root included.
    pub unfolded_nodes: BigUint,
    pub unfolded_leaves: BigUint,
}

impl std::fmt::Display for DagStats {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "entries\t{}", self.entries)?;
        writeln!(f, "links\t{}", self.links)?;
        writeln!(f, "contexts\t{}", self.contexts)?;
        writeln!(f, "dag_nodes\t{}", self.dag_nodes)?;
        writeln!(f, "unfolded_nodes\t{}", self.unfolded_nodes)?;
        write!(f, "unfolded_leaves\t{}", self.unfolded_leaves)
    }
}

impl Dag {
    /// The result tree, built by splicing every link.
    pub fn unfold(&self, max_nodes: usize) -> Result<DataTree, SizeLimitError> {
        let mut budget = max_nodes.checked_sub(1).ok_or(SizeLimitError(max_nodes))?;
        let mut spend = |k: usize| -> Result<(), SizeLimitError> {
            budget = budget.checked_sub(k).ok_or(SizeLimitError(max_nodes))?;
            Ok(())
        };
        let mut b = TreeBuilder::new();
        b.open(Label::doc());
        // (items, next index, close a node when done)
        let mut stack: Vec<(&[DNode], usize, bool)> = vec![(&self.entries[self.root].content, 0, false)];
        while let Some(top) = stack.last_mut() {
            let (items, i, close) = *top;
            if i == items.len() {
                stack.pop();
                if close {
                    b.close();
                }
                continue;
            }
            top.1 += 1;
            match &items[i] {
                DNode::Node(l, kids) => {
                    spend(1)?;
                    b.open(l.clone());
                    stack.push((kids, 0, true));
                }
                DNode::Link(e) => stack.push((&self.entries[*e].content, 0, false)),
                DNode::Input(n) => {
                    let sub = self.input.subtree_view(*n);
                    spend(sub.len())?;
                    b.copy(&sub);
                }
            }
        }
        b.close();
        Ok(b.finish())
    }

    /// Entries in an order where every link target precedes its sources.
    fn topological(&self) -> Vec<usize> {
        fn targets(items: &[DNode], out: &mut Vec<usize>) {
            for it in items {
                match it {
                    DNode::Node(_, kids) => targets(kids, out),
                    DNode::Link(e) => out.push(*e),
                    DNode::Input(_) => {}
                }
            }
        }
        let succ: Vec<Vec<usize>> = self
            .entries
            .iter()
            .map(|e| {
                let mut v = Vec::new();
                targets(&e.content, &mut v);
                v
            })
            .collect();
        let mut done = vec![false; self.entries.len()];
        let mut order = Vec::with_capacity(self.entries.len());
        for start in 0..self.entries.len() {
            if done[start] {
                continue;
            }
            done[start] = true;
            let mut stack = vec![(start, 0usize)];
            while let Some(top) = stack.last_mut() {
                let (e, i) = *top;
                if i == succ[e].len() {
                    order.push(e);
                    stack.pop();
                    continue;
                }
                top.1 += 1;
                let next = succ[e][i];
                if !done[next] {
                    done[next] = true;
                    stack.push((next, 0));
                }
            }
        }
        order
    }

    pub fn stats(&self) -> DagStats {
        // (nodes, leaves) of the forest each entry unfolds to
        let mut memo: Vec<(BigUint, BigUint)> = vec![(BigUint::zero(), BigUint::zero()); self.entries.len()];
        fn forest(d: &Dag, items: &[DNode], memo: &[(BigUint, BigUint)]) -> (BigUint, BigUint) {
            let (mut n, mut l) = (BigUint::zero(), BigUint::zero());
            for it in items {
                let (a, b) = match it {
                    DNode::Node(_, kids) => {
                        let (kn, kl) = forest(d, kids, memo);
                        let leaves = if kn.is_zero() { BigUint::one() } else { kl };
                        (kn + 1u32, leaves)
                    }
                    DNode::Link(e) => memo[*e].clone(),
                    DNode::Input(x) => {
                        let t = d.input.subtree_view(*x);
                        (BigUint::from(t.len()), BigUint::from(t.leaf_count()))
                    }
                };
                n += a;
                l += b;
            }
            (n, l)
        }
        for e in self.topological() {
            memo[e] = forest(self, &self.entries[e].content, &memo);
        }
        let (n, l) = memo[self.root].clone();
        let leaves = if n.is_zero() { BigUint::one() } else { l };
        let mut links = 0;
        let mut dag_nodes = 0;
        fn count(items: &[DNode], links: &mut usize, nodes: &mut usize) {
            for it in items {
                match it {
                    DNode::Node(_, kids) => {
                        *nodes += 1;
                        count(kids, links, nodes);
                    }
                    _ => *links += 1,
                }
            }
        }
        for e in &self.entries {
            count(&e.content, &mut links, &mut dag_nodes);
        }
        DagStats {
            entries: self.entries.len(),
            links,
            contexts: self.contexts,
            dag_nodes,
            unfolded_nodes: n + 1u32,
            unfolded_leaves: leaves,
        }
    }
}
