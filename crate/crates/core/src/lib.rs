//! Bayesian optimization with Gaussian-process surrogates, instrumented for
//! regret analysis.
//!
//! The crate implements four engines (GP-UCB, GP-TS, BO-EI and BO-VEI) on a
//! box domain `[0, r]^d`, together with every closed-form schedule they need
//! and the diagnostics used to check probabilistic regret bounds empirically:
//! information gain, a greedy estimate of the maximum information gain, three
//! regret definitions and Monte-Carlo coverage tests.
//!
//! Everything here is `no_std` + `alloc`. File formats, configuration and the
//! command line live in the companion `bo-cli` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod acquisition;
pub mod diagnostics;
pub mod domain;
pub mod engine;
pub mod error;
pub mod gp;
pub mod kernels;
mod linalg;
pub mod math;
pub mod objectives;
pub mod rng;
pub mod schedules;

pub use acquisition::{AcquisitionKind, AcquisitionSpec, Incumbent, ThetaMode};
pub use domain::{BoxDomain, Discretization};
pub use engine::{run, RegretDefinition, RunConfig, StoppingRule, Trace, TraceRecord};
pub use error::{Error, Result};
pub use gp::GpState;
pub use kernels::{KernelFamily, KernelSpec};
pub use objectives::{Objective, ObjectiveSpec};
pub use schedules::ScheduleParams;
