//! Simulation scenarios, metrics and the replicated experiment runner.

pub mod experiment;
pub mod generate;
pub mod metrics;
pub mod rng;

pub use experiment::{run_experiment, write_rows_csv, write_summary_csv, write_timing_csv, ExperimentReport, LambdaGrid, MethodSpec};
pub use generate::{generate, FlipRule, Generated, MixtureVariant, Scenario};
pub use metrics::{roc_auc, score, MetricsReport};
