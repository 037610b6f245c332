//! Small-step rewriting of configurations: activation, if-normalization,
//! statement steps, scheduling, and confluence fuzzing.

pub mod config;
mod run;
mod step;

pub use config::{CNode, Kind};
pub use run::{
    explore_schedules, fuzz_confluence, initial_configuration, mode_for, path_string, run, run_traced, run_with,
    trace_line, ConfluenceReport, Exploration, RunOutcome, Runner, Strategy, DEFAULT_MAX_STEPS,
};
pub use step::{step, Chosen, Engine, StepError, StepInfo};
