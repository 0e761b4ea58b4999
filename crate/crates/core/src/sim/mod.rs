//! Environment generators, execution simulation and experiments.

pub mod cases;
pub mod execution;
pub mod experiment;
pub mod generate;
pub mod output;
pub mod robustness;

pub use execution::{simulate_execution, ExecutionTrace};
pub use experiment::{
    paired_difference, run_experiment, run_heuristic_study, summarize, EfficiencyMetrics, ExperimentConfig,
    HeuristicRow, ResultRow, Setting, Stat, SummaryEntry,
};
pub use generate::{generate_environment, GeneratorSpec};
pub use output::{emit_results, read_rows, write_summary, Format};
pub use robustness::{perturb_rates, run_robustness};
