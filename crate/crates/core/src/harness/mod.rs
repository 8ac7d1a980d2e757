//! Experiment plumbing: seeding, Monte Carlo statistics, configuration,
//! result tables and CSV output.

mod config;
mod run;
mod seed;
mod stats;
mod table;

pub use config::{parse_grid, ExperimentConfig, ExperimentKind, ParamSpec, ParamType};
pub use run::{execute, run, run_detailed, with_thread_pool, RunOutput, THREADS_ENV};
pub use seed::SeedTree;
pub use stats::{Estimate, Moments};
pub use table::{format_number, runs_path, ResultTable, SE_SUFFIX, SIGNIFICANT_DIGITS};

use rayon::prelude::*;

/// Evaluates `f(0..count)` on the worker pool and returns results in index
/// order.
pub fn par_runs<T, F>(count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..count).into_par_iter().map(f).collect()
}
