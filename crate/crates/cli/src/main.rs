//! `xtl`: run, inspect and generate tree transformation programs.
//!
//! Exit codes:
//! 0 success, 1 unreadable or malformed input, 2 evaluation error,
//! 3 step limit, 4 program not input-only, 5 nontermination,
//! 6 confluence violation, 7 size limit, 64 bad command line.

use std::fs;
use std::io::{self, Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use thiserror::Error;
use xtl_core::codegen::{
    compose, gen_doubling, gen_lba_program, gen_string2tree, gen_tm_program, gen_tree2string, parse_tm,
};
use xtl_core::dag::{evaluate_dag, parse_dag, DagError, DagLimits, DEFAULT_MAX_NODES};
use xtl_core::engine::{fuzz_confluence, run_traced, trace_line, RunOutcome, Strategy, DEFAULT_MAX_STEPS};
use xtl_core::syntax::{classify_version, Program, Version};
use xtl_core::tree::{parse_tree, tree_to_string, DataTree, Label};

#[derive(Parser)]
#[command(name = "xtl", version, about = "Tree transformation programs: run, analyse, generate")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Write the main output here instead of standard output.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a program on a tree with the rewrite engine.
    Run {
        program: String,
        tree: String,
        /// Log every step to standard error.
        #[arg(long)]
        trace: bool,
        /// Pick enabled statements at random with this seed instead of leftmost.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = DEFAULT_MAX_STEPS)]
        max_steps: u64,
    },
    /// Evaluate an input-only program as a shared dag.
    Run10 {
        program: String,
        tree: String,
        /// Print the unfolded tree instead of the dag.
        #[arg(long)]
        unfold: bool,
        #[arg(long, default_value_t = DEFAULT_MAX_NODES)]
        max_nodes: usize,
    },
    /// Check a program and print its version.
    Check { program: String },
    /// Print a generated program.
    Gen {
        #[command(subcommand)]
        what: Gen,
    },
    /// Print the sequential composition of three programs.
    Compose { first: String, second: String, third: String },
    /// Run a program under several random schedules and compare the results.
    Fuzz {
        program: String,
        tree: String,
        #[arg(long, default_value_t = 10)]
        seeds: u64,
        /// First seed; the others follow consecutively.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_MAX_STEPS)]
        max_steps: u64,
    },
    /// Unfold a dag file written by `run10` back into a tree.
    Unfold {
        dag: String,
        /// The input tree the dag was computed from.
        tree: String,
        #[arg(long, default_value_t = DEFAULT_MAX_NODES)]
        max_nodes: usize,
    },
    /// Print size statistics of a dag file.
    Stats { dag: String, tree: String },
}

#[derive(Subcommand)]
enum Gen {
    /// Flattens trees into brace-delimited label sequences.
    Tree2string {
        #[arg(long, value_delimiter = ',', default_value = "a")]
        labels: Vec<String>,
    },
    /// Rebuilds trees from the flattened form.
    String2tree {
        #[arg(long, value_delimiter = ',', default_value = "a")]
        labels: Vec<String>,
    },
    /// Simulates a Turing machine on a flat tree.
    Tm { machine: String },
    /// Decides a bounded machine with an input-only program.
    Lba { machine: String },
    /// Output with 2^k leaves.
    Doubling { k: usize },
}

#[derive(Debug, Error)]
enum Failure {
    #[error("{0}")]
    Input(String),
    #[error("evaluation error {0}")]
    Eval(String),
    #[error("{0}")]
    StepLimit(String),
    #[error("{0}")]
    NotV1(String),
    #[error("{0}")]
    Nontermination(String),
    #[error("{0}")]
    NotConfluent(String),
    #[error("{0}")]
    TooLarge(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 1,
            Failure::Eval(_) => 2,
            Failure::StepLimit(_) => 3,
            Failure::NotV1(_) => 4,
            Failure::Nontermination(_) => 5,
            Failure::NotConfluent(_) => 6,
            Failure::TooLarge(_) => 7,
        }
    }
}

fn read(path: &str) -> Result<String, Failure> {
    if path == "-" {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s).map_err(|e| Failure::Input(format!("stdin: {e}")))?;
        Ok(s)
    } else {
        fs::read_to_string(path).map_err(|e| Failure::Input(format!("{path}: {e}")))
    }
}

fn program(path: &str) -> Result<Program, Failure> {
    Program::parse(&read(path)?).map_err(|e| Failure::Input(format!("{path}: {e}")))
}

fn tree(path: &str) -> Result<DataTree, Failure> {
    parse_tree(read(path)?.trim()).map_err(|e| Failure::Input(format!("{path}: {e}")))
}

fn labels(names: &[String]) -> Result<Vec<Label>, Failure> {
    names.iter().map(|l| Label::new(l.trim()).map_err(|e| Failure::Input(e.to_string()))).collect()
}

fn dag_failure(e: DagError) -> Failure {
    match e {
        DagError::NotV1 => Failure::NotV1(e.to_string()),
        DagError::Nontermination { .. } => Failure::Nontermination(e.to_string()),
        DagError::Eval { .. } => Failure::Eval(e.to_string()),
        DagError::Budget(_) => Failure::TooLarge(e.to_string()),
    }
}

fn execute(cmd: Command) -> Result<String, Failure> {
    match cmd {
        Command::Run { program: p, tree: t, trace, seed, max_steps } => {
            let (p, t) = (program(&p)?, tree(&t)?);
            let strategy = seed.map_or(Strategy::LeftmostOutermost, Strategy::Random);
            let mut err = io::stderr().lock();
            let outcome = run_traced(&p, &t, strategy, max_steps, |n, info| {
                if trace {
                    let _ = writeln!(err, "{}", trace_line(n, info));
                }
            });
            match outcome {
                RunOutcome::Final { tree, .. } => Ok(tree_to_string(&tree)),
                RunOutcome::StepLimit { .. } => Err(Failure::StepLimit(outcome.to_string())),
                RunOutcome::EvalError { .. } => Err(Failure::Eval(outcome.to_string())),
            }
        }
        Command::Run10 { program: p, tree: t, unfold, max_nodes } => {
            let (p, t) = (program(&p)?, tree(&t)?);
            let dag = evaluate_dag(&p, &t, DagLimits::default()).map_err(dag_failure)?;
            eprintln!("{}", dag.stats());
            if unfold {
                let out = dag.unfold(max_nodes).map_err(|e| Failure::TooLarge(e.to_string()))?;
                Ok(tree_to_string(&out))
            } else {
                Ok(dag.to_string().trim_end().to_string())
            }
        }
        Command::Check { program: p } => Ok(match classify_version(&program(&p)?) {
            Version::V1 => "v1".into(),
            Version::V2 => "v2".into(),
        }),
        Command::Gen { what } => {
            let machine = |path: &str| parse_tm(&read(path)?).map_err(|e| Failure::Input(format!("{path}: {e}")));
            let p = match what {
                Gen::Tree2string { labels: l } => {
                    gen_tree2string(&labels(&l)?).map_err(|e| Failure::Input(e.to_string()))?
                }
                Gen::String2tree { labels: l } => {
                    gen_string2tree(&labels(&l)?).map_err(|e| Failure::Input(e.to_string()))?
                }
                Gen::Tm { machine: m } => gen_tm_program(&machine(&m)?),
                Gen::Lba { machine: m } => gen_lba_program(&machine(&m)?),
                Gen::Doubling { k } => gen_doubling(k),
            };
            Ok(p.to_string().trim_end().to_string())
        }
        Command::Compose { first, second, third } => {
            let c = compose(&program(&first)?, &program(&second)?, &program(&third)?)
                .map_err(|e| Failure::Input(e.to_string()))?;
            Ok(c.to_string().trim_end().to_string())
        }
        Command::Fuzz { program: p, tree: t, seeds, seed, max_steps } => {
            let (p, t) = (program(&p)?, tree(&t)?);
            let seeds: Vec<u64> = (seed..seed + seeds).collect();
            let report = fuzz_confluence(&p, &t, &seeds, max_steps);
            if report.is_confluent() {
                Ok(report.to_string())
            } else {
                Err(Failure::NotConfluent(report.to_string()))
            }
        }
        Command::Unfold { dag, tree: t, max_nodes } => {
            let t = tree(&t)?;
            let dag = parse_dag(&read(&dag)?, &t).map_err(|e| Failure::Input(format!("{dag}: {e}")))?;
            let out = dag.unfold(max_nodes).map_err(|e| Failure::TooLarge(e.to_string()))?;
            Ok(tree_to_string(&out))
        }
        Command::Stats { dag, tree: t } => {
            let t = tree(&t)?;
            let dag = parse_dag(&read(&dag)?, &t).map_err(|e| Failure::Input(format!("{dag}: {e}")))?;
            Ok(dag.stats().to_string())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 64 } else { 0 });
        }
    };
    match execute(cli.command) {
        Ok(text) => {
            let written = match &cli.out {
                Some(path) => fs::write(path, format!("{text}\n")),
                None => writeln!(io::stdout(), "{text}"),
            };
            match written {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("xtl: cannot write output: {e}");
                    ExitCode::from(1)
                }
            }
        }
        Err(f) => {
            eprintln!("xtl: {f}");
            ExitCode::from(f.code())
        }
    }
}
