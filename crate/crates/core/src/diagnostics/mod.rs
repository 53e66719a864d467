//! Regret accounting, information gain, bound evaluation and coverage
//! studies.

mod bounds;
mod coverage;
mod info;
mod regret;

pub use bounds::{
    bound_ei, bound_ucb, bound_vei, fandnu_upper, fnu_lower, sigma_lipschitz, EiBound, UcbBound, VeiBound, FNU_C1,
    FNU_C2,
};
pub use coverage::{
    coverage_replication, coverage_test, trajectory_coverage, wilson_interval, CoverageKind, CoverageOutcome,
    CoverageParams, CoverageReport, TrajectoryCoverage, WILSON_Z99,
};
pub use info::{gamma_greedy, info_gain, variance_sum_check, GammaEstimate, InfoGain, VarianceSumCheck};
pub use regret::{improvement, regret_series, saturated_count, RegretLedger};
