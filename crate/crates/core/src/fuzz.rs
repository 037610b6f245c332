//! Random inputs for differential testing: trees, and programs drawn from a
//! grammar that only produces terminating programs.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::syntax::{Program, Rule, Statement, Template};
use crate::tree::{DataTree, Label, TreeBuilder};
use crate::xexpr::XExpr;
use crate::Name;

/// A random ordered tree with between 1 and `max_nodes` nodes: each new node
/// hangs under a uniformly chosen earlier one.
pub fn random_tree<R: Rng>(rng: &mut R, labels: &[Label], max_nodes: usize) -> DataTree {
    assert!(!labels.is_empty() && max_nodes >= 1);
    let n = rng.gen_range(1..=max_nodes);
    let mut kids: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 1..n {
        let p = rng.gen_range(0..i);
        kids[p].push(i);
    }
    let names: Vec<&Label> = (0..n).map(|_| labels.choose(rng).expect("labels")).collect();
    let mut b = TreeBuilder::new();
    // (node, next child index)
    let mut stack = vec![(0usize, 0usize)];
    b.open(names[0].clone());
    while let Some((v, i)) = stack.last_mut() {
        if *i < kids[*v].len() {
            let c = kids[*v][*i];
            *i += 1;
            b.open(names[c].clone());
            stack.push((c, 0));
        } else {
            b.close();
            stack.pop();
        }
    }
    b.finish()
}

/// Knobs for [`random_program`].
#[derive(Clone, Debug)]
pub struct ProgramShape {
    pub max_groups: usize,
    pub max_rules_per_group: usize,
    pub max_body: usize,
    pub max_depth: usize,
    /// Allow `$y/*`; programs without it classify as v1.
    pub temp_reads: bool,
    pub labels: Vec<Label>,
}

impl Default for ProgramShape {
    fn default() -> Self {
        ProgramShape {
            max_groups: 3,
            max_rules_per_group: 2,
            max_body: 3,
            max_depth: 2,
            temp_reads: true,
            labels: ["a", "b", "c"].iter().map(|l| Label::new(l).expect("label")).collect(),
        }
    }
}

#[derive(Clone, Default)]
struct Scope {
    nodes: Vec<Name>,
    counters: Vec<Name>,
    trees: Vec<Name>,
}

struct Gen<'a, R> {
    rng: &'a mut R,
    shape: &'a ProgramShape,
    /// Group of every rule, in rule order.
    groups: Vec<usize>,
    ngroups: usize,
    rule: usize,
    fresh: usize,
}

fn mode_of(g: usize) -> Option<Name> {
    (g > 0).then(|| format!("g{g}").into())
}

impl<R: Rng> Gen<'_, R> {
    fn group(&self) -> usize {
        self.groups[self.rule]
    }

    fn fresh(&mut self, prefix: &str) -> Name {
        self.fresh += 1;
        format!("{prefix}{}_{}", self.rule, self.fresh).into()
    }

    fn atom(&mut self) -> XExpr {
        [XExpr::Root, XExpr::Child, XExpr::FirstChild, XExpr::NextSibling, XExpr::PrevSibling, XExpr::Empty]
            .choose(self.rng)
            .expect("atoms")
            .clone()
    }

    fn var(&mut self, vars: &[Name]) -> Option<XExpr> {
        vars.choose(self.rng).map(|v| XExpr::Var(v.clone()))
    }

    /// A node-typed expression over the input axes and node variables.
    fn nodes(&mut self, scope: &Scope) -> XExpr {
        let a = self.atom();
        match self.rng.gen_range(0..5) {
            0 => XExpr::union(a, self.atom()),
            1 => XExpr::except(a, self.atom()),
            2 => match self.var(&scope.nodes) {
                Some(v) => XExpr::intersect(v, a),
                None => a,
            },
            3 => match self.var(&scope.nodes) {
                Some(v) => XExpr::except(a, v),
                None => a,
            },
            _ => a,
        }
    }

    /// Selects only nodes after the context node in document order.
    fn forward(&mut self, scope: &Scope) -> XExpr {
        let base = [XExpr::Child, XExpr::FirstChild, XExpr::NextSibling].choose(self.rng).expect("axes").clone();
        match (self.rng.gen_range(0..4), self.var(&scope.nodes)) {
            (0, Some(v)) => XExpr::intersect(v, base),
            (1, Some(v)) => XExpr::except(base, v),
            _ => base,
        }
    }

    fn test(&mut self, scope: &Scope) -> XExpr {
        loop {
            let e = match self.rng.gen_range(0..7) {
                0 => XExpr::NameIs(self.shape.labels.choose(self.rng).expect("labels").clone()),
                1 => XExpr::Child,
                2 => XExpr::NextSibling,
                3 => XExpr::eq(XExpr::Position, XExpr::One),
                4 => match self.var(&scope.nodes) {
                    Some(v) => v,
                    None => continue,
                },
                5 => match self.var(&scope.nodes) {
                    Some(v) => XExpr::intersect(XExpr::ContextItem, v),
                    None => continue,
                },
                _ => match self.var(&scope.counters) {
                    Some(c) => XExpr::eq(c, XExpr::One),
                    None => continue,
                },
            };
            return e;
        }
    }

    fn template(&mut self, depth: usize, scope: &Scope) -> Template {
        let len = self.rng.gen_range(0..=self.shape.max_body.saturating_sub(depth));
        let mut scope = scope.clone();
        (0..len).map(|_| self.statement(depth, &mut scope)).collect()
    }

    fn statement(&mut self, depth: usize, scope: &mut Scope) -> Statement {
        let g = self.group();
        let nested = depth < self.shape.max_depth;
        loop {
            let s = match self.rng.gen_range(0..11) {
                0 => Statement::Cons {
                    label: self.shape.labels.choose(self.rng).expect("labels").clone(),
                    body: if nested { self.template(depth + 1, scope) } else { Vec::new() },
                },
                1 | 2 => {
                    let to = self.rng.gen_range(g..self.ngroups);
                    Statement::Apply { expr: self.forward(scope), mode: mode_of(to) }
                }
                3 if g + 1 < self.ngroups => {
                    let to = self.rng.gen_range(g + 1..self.ngroups);
                    let expr = match scope.trees.choose(self.rng) {
                        Some(y) if self.shape.temp_reads && self.rng.gen_bool(0.5) => XExpr::TreeRoot(y.clone()),
                        _ => [XExpr::Root, XExpr::PrevSibling, XExpr::Child].choose(self.rng).expect("axes").clone(),
                    };
                    Statement::Apply { expr, mode: mode_of(to) }
                }
                4 if self.rule + 1 < self.groups.len() => {
                    let j = self.rng.gen_range(self.rule + 1..self.groups.len());
                    Statement::Call(format!("r{j}").into())
                }
                5 if nested => Statement::Foreach { expr: self.forward(scope), body: self.template(depth + 1, scope) },
                6 => {
                    if self.rng.gen_bool(0.3) {
                        let var = self.fresh("c");
                        let expr = if self.rng.gen() { XExpr::One } else { XExpr::Position };
                        scope.counters.push(var.clone());
                        Statement::Val { var, expr }
                    } else {
                        let var = self.fresh("v");
                        let expr = self.nodes(scope);
                        scope.nodes.push(var.clone());
                        Statement::Val { var, expr }
                    }
                }
                7 if nested => {
                    let var = self.fresh("t");
                    let body = self.template(depth + 1, scope);
                    scope.trees.push(var.clone());
                    Statement::Tree { var, body }
                }
                8 => match scope.trees.choose(self.rng) {
                    Some(y) if self.shape.temp_reads && self.rng.gen() => {
                        Statement::Vcopy(XExpr::union(XExpr::TreeRoot(y.clone()), XExpr::Empty))
                    }
                    Some(y) => Statement::Tcopy(y.clone()),
                    None => continue,
                },
                9 => Statement::Vcopy(self.nodes(scope)),
                10 if nested => Statement::If {
                    test: self.test(scope),
                    then: self.template(depth + 1, scope),
                    els: self.template(depth + 1, scope),
                },
                _ => continue,
            };
            return s;
        }
    }
}

/// A random program that terminates on every input.
///
/// Rules are split into groups, each with its own mode (group 0 is
/// modeless) and ending in a `//*` rule so the built-in default never fires.
/// Every invocation either stays in its group and moves forward in document
/// order, calls a later rule on the same node, or enters a later group.
pub fn random_program<R: Rng>(rng: &mut R, shape: &ProgramShape) -> Program {
    let ngroups = rng.gen_range(1..=shape.max_groups);
    let mut groups = Vec::new();
    for g in 0..ngroups {
        let n = rng.gen_range(1..=shape.max_rules_per_group);
        groups.extend(std::iter::repeat_n(g, n));
    }
    let mut gen = Gen { rng, shape, groups: groups.clone(), ngroups, rule: 0, fresh: 0 };
    let mut rules = Vec::new();
    for (i, &g) in groups.iter().enumerate() {
        gen.rule = i;
        let last_in_group = groups.get(i + 1) != Some(&g);
        let matches = if last_in_group || gen.rng.gen() { XExpr::AllNodes } else { XExpr::Root };
        let body = gen.template(0, &Scope::default());
        rules.push(Rule { name: format!("r{i}").into(), matches, mode: mode_of(g), body });
    }
    let p = Program { rules };
    p.check().expect("generated programs are well formed");
    p
}

/// A template of `cons`, `val` and nested `if` statements with at most
/// `max_ifs` ifs, for exercising if-normalization on its own.
pub fn random_if_template<R: Rng>(rng: &mut R, max_ifs: usize, labels: &[Label]) -> Template {
    fn go<R: Rng>(rng: &mut R, budget: &mut usize, depth: usize, labels: &[Label]) -> Template {
        let len = rng.gen_range(0..=3usize.saturating_sub(depth / 2));
        let mut out = Vec::new();
        for _ in 0..len {
            let s = if *budget > 0 && rng.gen_bool(0.6) {
                *budget -= 1;
                let test = match rng.gen_range(0..4) {
                    0 => XExpr::NameIs(labels.choose(rng).expect("labels").clone()),
                    1 => XExpr::Child,
                    2 => XExpr::eq(XExpr::Position, XExpr::One),
                    _ => XExpr::NextSibling,
                };
                Statement::If {
                    test,
                    then: go(rng, budget, depth + 1, labels),
                    els: go(rng, budget, depth + 1, labels),
                }
            } else if rng.gen_bool(0.2) {
                Statement::Apply { expr: XExpr::Child, mode: None }
            } else {
                let label = labels.choose(rng).expect("labels").clone();
                let body = if depth < 3 && rng.gen() { go(rng, budget, depth + 1, labels) } else { Vec::new() };
                Statement::Cons { label, body }
            };
            out.push(s);
        }
        out
    }
    let mut budget = rng.gen_range(1..=max_ifs);
    go(rng, &mut budget, 0, labels)
}
