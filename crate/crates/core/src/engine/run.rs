use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{denoted_tree, enabled, first_enabled, if_normalize_list, init, CNode};
use super::step::{step, Engine, StepError, StepInfo};
use crate::syntax::{classify_version, Program, Statement, Version};
use crate::tree::{is_isomorphic, tree_to_string, DataTree};
use crate::xexpr::{Context, EvalMode, XExpr};

pub const DEFAULT_MAX_STEPS: u64 = 1_000_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Strategy {
    LeftmostOutermost,
    Random(u64),
    /// Picks the i-th enabled statement (in preorder) at each step, wrapping
    /// around; falls back to leftmost once the script runs out.
    Script(Vec<usize>),
}

#[derive(Clone, Debug)]
pub enum RunOutcome {
    Final { tree: DataTree, steps: u64 },
    StepLimit { limit: u64 },
    EvalError { path: Vec<usize>, error: StepError },
}

impl RunOutcome {
    pub fn tree(&self) -> Option<&DataTree> {
        match self {
            RunOutcome::Final { tree, .. } => Some(tree),
            _ => None,
        }
    }
}

impl fmt::Display for RunOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunOutcome::Final { tree, steps } => write!(f, "final after {steps} steps: {}", tree_to_string(tree)),
            RunOutcome::StepLimit { limit } => write!(f, "step limit {limit} reached"),
            RunOutcome::EvalError { path, error } => write!(f, "at statement {}: {error}", path_string(path)),
        }
    }
}

pub fn path_string(path: &[usize]) -> String {
    path.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(".")
}

/// Evaluation mode used for a program: input-only `//*` and counters for
/// programs that classify as v1.
pub fn mode_for(p: &Program) -> EvalMode {
    match classify_version(p) {
        Version::V1 => EvalMode::V1,
        Version::V2 => EvalMode::V2,
    }
}

/// `if_normalize(initial_configuration(t))`
pub fn initial_configuration(t: &DataTree, mode: EvalMode) -> Result<Vec<CNode>, (Vec<usize>, StepError)> {
    let c = Arc::new(Context::initial(t.clone()));
    let mut list = init(&[Statement::Apply { expr: XExpr::Root, mode: None }], &c);
    if_normalize_list(&mut list, mode).map_err(|(p, e)| (p, e.into()))?;
    Ok(list)
}

/// A running configuration with its scheduler.
pub struct Runner<'e> {
    engine: &'e Engine,
    pub config: Vec<CNode>,
    pub steps: u64,
    strategy: Strategy,
    rng: ChaCha8Rng,
    script_at: usize,
}

impl<'e> Runner<'e> {
    pub fn new(engine: &'e Engine, t: &DataTree, strategy: Strategy) -> Result<Runner<'e>, (Vec<usize>, StepError)> {
        let seed = if let Strategy::Random(s) = strategy { s } else { 0 };
        Ok(Runner {
            engine,
            config: initial_configuration(t, engine.mode)?,
            steps: 0,
            strategy,
            rng: ChaCha8Rng::seed_from_u64(seed),
            script_at: 0,
        })
    }

    fn pick(&mut self) -> Option<Vec<usize>> {
        match &self.strategy {
            Strategy::LeftmostOutermost => first_enabled(&self.config),
            Strategy::Random(_) => {
                let all = enabled(&self.config);
                if all.is_empty() {
                    return None;
                }
                let i = self.rng.gen_range(0..all.len());
                all.into_iter().nth(i)
            }
            Strategy::Script(script) => {
                if self.script_at >= script.len() {
                    return first_enabled(&self.config);
                }
                let want = script[self.script_at];
                self.script_at += 1;
                let all = enabled(&self.config);
                if all.is_empty() {
                    return None;
                }
                let n = all.len();
                all.into_iter().nth(want % n)
            }
        }
    }

    /// One step; `Ok(None)` once nothing is enabled.
    pub fn step(&mut self) -> Result<Option<StepInfo>, (Vec<usize>, StepError)> {
        let Some(path) = self.pick() else { return Ok(None) };
        let info = step(self.engine, &mut self.config, &path)?;
        self.steps += 1;
        Ok(Some(info))
    }

    pub fn run(mut self, max_steps: u64, mut trace: impl FnMut(u64, &StepInfo)) -> RunOutcome {
        loop {
            if self.config.iter().all(CNode::is_terminal) {
                let tree = denoted_tree(&self.config).expect("terminal configuration");
                return RunOutcome::Final { tree, steps: self.steps };
            }
            if self.steps >= max_steps {
                return RunOutcome::StepLimit { limit: max_steps };
            }
            match self.step() {
                Ok(Some(info)) => trace(self.steps, &info),
                Ok(None) => unreachable!("a non-terminal configuration always has an enabled statement"),
                Err((path, error)) => return RunOutcome::EvalError { path, error },
            }
        }
    }
}

/// Runs `p` on `t`, choosing the evaluation mode from the program's version.
pub fn run(p: &Program, t: &DataTree, strategy: Strategy, max_steps: u64) -> RunOutcome {
    run_traced(p, t, strategy, max_steps, |_, _| {})
}

pub fn run_traced(
    p: &Program,
    t: &DataTree,
    strategy: Strategy,
    max_steps: u64,
    trace: impl FnMut(u64, &StepInfo),
) -> RunOutcome {
    let engine = Engine::new(p.clone(), mode_for(p));
    run_with(&engine, t, strategy, max_steps, trace)
}

pub fn run_with(
    engine: &Engine,
    t: &DataTree,
    strategy: Strategy,
    max_steps: u64,
    trace: impl FnMut(u64, &StepInfo),
) -> RunOutcome {
    match Runner::new(engine, t, strategy) {
        Ok(r) => r.run(max_steps, trace),
        Err((path, error)) => RunOutcome::EvalError { path, error },
    }
}

/// Tab-separated trace line: step, kind, path, rules, triple.
pub fn trace_line(step: u64, info: &StepInfo) -> String {
    let rules = if info.rules.is_empty() { "-".to_string() } else { info.rules.join(",") };
    format!("{step}\t{}\t{}\t{rules}\t{}", info.kind, path_string(&info.path), info.triple)
}

#[derive(Clone, Debug)]
pub struct ConfluenceReport {
    pub seeds: Vec<u64>,
    pub outcomes: Vec<RunOutcome>,
    /// Terminating runs whose result differs from the first terminating run.
    pub mismatches: Vec<u64>,
    /// Some seeds terminated while others hit the step limit.
    pub termination_disagrees: bool,
}

impl ConfluenceReport {
    pub fn is_confluent(&self) -> bool {
        self.mismatches.is_empty() && !self.termination_disagrees
    }

    pub fn finals(&self) -> usize {
        self.outcomes.iter().filter(|o| o.tree().is_some()).count()
    }
}

impl fmt::Display for ConfluenceReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.seeds.len();
        if self.is_confluent() {
            write!(f, "confluent: {}/{n} isomorphic", n)
        } else {
            write!(
                f,
                "not confluent: {}/{n} isomorphic, mismatching seeds {:?}{}",
                self.finals().saturating_sub(self.mismatches.len()),
                self.mismatches,
                if self.termination_disagrees { ", termination disagrees" } else { "" }
            )
        }
    }
}

/// One random-strategy run per seed; terminating results must be pairwise
/// isomorphic and termination must agree across seeds.
pub fn fuzz_confluence(p: &Program, t: &DataTree, seeds: &[u64], max_steps: u64) -> ConfluenceReport {
    let engine = Engine::new(p.clone(), mode_for(p));
    let outcomes: Vec<RunOutcome> =
        seeds.iter().map(|&s| run_with(&engine, t, Strategy::Random(s), max_steps, |_, _| {})).collect();
    let mut reference: Option<&DataTree> = None;
    let mut mismatches = Vec::new();
    let (mut limited, mut done) = (false, false);
    let mut errored = Vec::new();
    for (o, &s) in outcomes.iter().zip(seeds) {
        match o {
            RunOutcome::Final { tree, .. } => {
                done = true;
                match reference {
                    None => reference = Some(tree),
                    Some(r) if !is_isomorphic(r, tree) => mismatches.push(s),
                    Some(_) => {}
                }
            }
            RunOutcome::StepLimit { .. } => limited = true,
            RunOutcome::EvalError { .. } => errored.push(s),
        }
    }
    if done {
        mismatches.extend(errored);
    }
    ConfluenceReport { seeds: seeds.to_vec(), termination_disagrees: limited && done, mismatches, outcomes }
}

/// The normal forms reachable under every schedule, found by exhaustive
/// search. Gives up with `None` when a schedule runs longer than
/// `max_steps` or more than `max_configs` configurations are visited.
pub fn explore_schedules(p: &Program, t: &DataTree, max_steps: u64, max_configs: usize) -> Option<Exploration> {
    let engine = Engine::new(p.clone(), mode_for(p));
    let mut out = Exploration::default();
    let start = match initial_configuration(t, engine.mode) {
        Ok(c) => c,
        Err((_, e)) => {
            out.errors.insert(e.to_string());
            return Some(out);
        }
    };
    let mut stack = vec![(start, 0u64)];
    let mut visited = 0usize;
    while let Some((config, depth)) = stack.pop() {
        visited += 1;
        if visited > max_configs {
            return None;
        }
        if config.iter().all(CNode::is_terminal) {
            let tree = denoted_tree(&config).expect("terminal configuration");
            out.normal_forms.insert(tree_to_string(&tree));
            out.longest = out.longest.max(depth);
            continue;
        }
        if depth == max_steps {
            return None;
        }
        for path in enabled(&config) {
            let mut next = config.clone();
            match step(&engine, &mut next, &path) {
                Ok(_) => stack.push((next, depth + 1)),
                Err((_, e)) => {
                    out.errors.insert(e.to_string());
                }
            }
        }
    }
    out.configs_visited = visited;
    Some(out)
}

#[derive(Clone, Debug, Default)]
pub struct Exploration {
    pub normal_forms: std::collections::BTreeSet<String>,
    pub errors: std::collections::BTreeSet<String>,
    /// Length of the longest terminating schedule.
    pub longest: u64,
    pub configs_visited: usize,
}
