//! Reproduction harness for the synthetic experiments: configuration,
//! estimator construction, parameter-recovery tables, intensity curves,
//! the MLE node sweep, weight comparisons and gradient checks.

pub mod checks;
pub mod compare;
pub mod config;
pub mod curves;
pub mod estimators;
pub mod metrics;
pub mod output;
pub mod sweep;
pub mod table;

pub use config::{ExperimentConfig, ModelConfig, ModelName, ObjectiveConfig, ObjectiveName};
pub use table::{run_table1, ResultRow, Table1};
