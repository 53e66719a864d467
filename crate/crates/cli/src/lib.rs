//! Experiment harness around `bo_core`: configuration files, replication
//! sweeps and the artifacts they write (trace CSV, summary and aggregate
//! JSON, regret-curve CSV).

pub mod config;
pub mod error;
pub mod harness;
pub mod sweep;
pub mod trace_csv;

pub use config::{Cell, ObjectiveSource, Plan, SweepAxes};
pub use error::{HarnessError, Result};
pub use harness::{build_objective, prepare, run_single, Summary};
pub use sweep::{run_sweep, Aggregate};
