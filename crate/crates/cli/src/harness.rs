//! Single runs: objective construction, the engine call and the
//! diagnostics written to the summary JSON.

use std::collections::BTreeMap;
use std::path::Path;

use bo_core::diagnostics::{
    bound_ei, bound_ucb, bound_vei, gamma_greedy, regret_series, trajectory_coverage, variance_sum_check, EiBound,
    GammaEstimate, TrajectoryCoverage, UcbBound, VarianceSumCheck, VeiBound,
};
use bo_core::engine::{RecordFlag, TraceRecord};
use bo_core::objectives::{make_gp_prior, make_rkhs, Benchmark};
use bo_core::{
    run, AcquisitionKind, Objective, ObjectiveSpec, RegretDefinition, RunConfig, ScheduleParams, ThetaMode, Trace,
};
use serde::{Deserialize, Serialize};

use crate::config::{ObjectiveSource, Plan};
use crate::error::{HarnessError, Result};

pub fn load_objective(path: &Path) -> Result<ObjectiveSpec> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| HarnessError::format(path, e))
}

/// Builds the objective a plan describes. Random objectives default to the
/// run seed, so each replication sees a fresh function.
pub fn build_objective(plan: &Plan) -> Result<ObjectiveSpec> {
    let spec = match &plan.objective {
        ObjectiveSource::Rkhs { centers, seed } => ObjectiveSpec::Rkhs(make_rkhs(
            plan.kernel,
            plan.d,
            plan.r,
            *centers,
            plan.b,
            seed.unwrap_or(plan.seed),
        )?),
        ObjectiveSource::Gp { axis_points, seed } => ObjectiveSpec::Gp(make_gp_prior(
            plan.kernel,
            plan.d,
            plan.r,
            *axis_points,
            seed.unwrap_or(plan.seed),
        )?),
        ObjectiveSource::Benchmark { name } => ObjectiveSpec::Benchmark(Benchmark::new(*name, plan.d, plan.r)?),
        ObjectiveSource::File { path } => {
            let spec = load_objective(path)?;
            let dom = spec.domain();
            if dom.d != plan.d || dom.r != plan.r {
                return Err(HarnessError::config(
                    "objective.file",
                    format!("objective lives on [0, {}]^{}, config says [0, {}]^{}", dom.r, dom.d, plan.r, plan.d),
                ));
            }
            spec
        }
    };
    Ok(spec)
}

/// Everything needed to run or re-check one plan.
pub struct Prepared {
    pub objective: ObjectiveSpec,
    pub lipschitz: f64,
    pub config: RunConfig,
    pub params: ScheduleParams,
}

pub fn prepare(plan: &Plan) -> Result<Prepared> {
    let objective = build_objective(plan)?;
    let lipschitz = plan.lipschitz.unwrap_or_else(|| objective.lipschitz());
    let config = plan.run_config(lipschitz)?;
    Ok(Prepared {
        params: config.params,
        objective,
        lipschitz,
        config,
    })
}

/// Greedy information-gain estimate for the plan's kernel up to its horizon.
pub fn estimate_gamma(plan: &Plan) -> Result<GammaEstimate> {
    Ok(gamma_greedy(
        &plan.kernel,
        plan.d,
        plan.r,
        plan.sigma,
        plan.horizon,
        plan.gamma_grid.max(plan.horizon),
    )?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretTotals {
    /// Definition accumulated in the trace's `r_cum` column.
    pub active: RegretDefinition,
    pub standard: f64,
    pub asymptotic: f64,
    pub improvement: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct Bounds {
    pub ucb: Option<UcbBound>,
    pub vei: Option<VeiBound>,
    pub ei: Option<EiBound>,
}

impl Bounds {
    /// Satisfaction of the bound matching the algorithm, if it has one.
    pub fn satisfied(&self) -> Option<bool> {
        self.ucb
            .as_ref()
            .map(|b| b.satisfied)
            .or(self.vei.as_ref().map(|b| b.satisfied))
            .or(self.ei.as_ref().map(|b| b.satisfied))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checks {
    pub variance_sum: VarianceSumCheck,
    /// `|f(x_t) − μ_{t−1}(x_t)|` against the time-only width.
    pub trajectory: TrajectoryCoverage,
    /// Whether the run's information gain stays below the greedy estimate.
    /// Not guaranteed; the estimate is only a lower bound on the maximum.
    pub info_gain_within_gamma: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Flags {
    pub stopped_early: bool,
    pub grid_capped_steps: usize,
    pub ts_chunked_steps: usize,
    pub bound_satisfied: Option<bool>,
    /// Trace invariants that failed; empty on a healthy run.
    pub violations: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub config: BTreeMap<String, String>,
    pub algorithm: AcquisitionKind,
    pub seed: u64,
    pub horizon: usize,
    pub steps: usize,
    pub objective: String,
    pub lipschitz: f64,
    pub f_star: f64,
    pub final_y_plus: f64,
    pub regret: RegretTotals,
    pub info_gain: f64,
    pub gamma_hat: f64,
    pub bounds: Bounds,
    pub checks: Checks,
    pub flags: Flags,
}

/// Rebuilds a [`Trace`] around records read back from CSV.
pub fn trace_from_records(prep: &Prepared, records: Vec<TraceRecord>) -> Trace {
    let stopped_early = records.last().is_some_and(|r| r.has(RecordFlag::Stopped));
    Trace {
        kind: prep.config.acq.kind,
        orientation: prep.config.orientation(),
        regret: prep.config.regret,
        f_star: prep.objective.optimum().f_star,
        horizon: prep.config.horizon,
        init: prep.config.init,
        stopped_early,
        records,
    }
}

/// Bounds for the algorithm that produced `trace`, using `gamma_hat` as the
/// information-gain term.
pub fn bounds_for(plan: &Plan, prep: &Prepared, trace: &Trace, gamma_hat: f64) -> Result<Bounds> {
    let mut b = Bounds::default();
    match trace.kind {
        AcquisitionKind::Ucb => b.ucb = Some(bound_ucb(trace, &prep.params, gamma_hat)),
        AcquisitionKind::Vei => {
            let n = trace.records.len().max(1);
            let theta = match plan.acq.theta_mode {
                ThetaMode::Fixed => plan.acq.theta.unwrap_or(0.0),
                ThetaMode::ScheduleMin => prep.params.vei(n)?.1,
            };
            b.vei = Some(bound_vei(trace, &prep.params, gamma_hat, plan.acq.alpha, theta)?);
        }
        AcquisitionKind::Ei => {
            b.ei = Some(bound_ei(
                trace,
                &prep.params,
                &plan.kernel,
                prep.objective.optimum(),
                gamma_hat,
                plan.probe_budget,
            )?)
        }
        AcquisitionKind::Ts => {}
    }
    Ok(b)
}

fn gamma_at(gamma: &GammaEstimate, steps: usize) -> f64 {
    if steps == 0 {
        0.0
    } else {
        gamma.series.get(steps - 1).copied().unwrap_or(gamma.gamma)
    }
}

pub fn summarize(plan: &Plan, prep: &Prepared, trace: &Trace, gamma: &GammaEstimate) -> Result<Summary> {
    let steps = trace.records.len();
    let f_star = trace.f_star;
    let total = |def| regret_series(&trace.records, f_star, Vec::new(), def).total();
    let gamma_hat = gamma_at(gamma, steps);
    let bounds = bounds_for(plan, prep, trace, gamma_hat)?;
    let info_gain = trace.info_gain();
    let count = |flag| trace.records.iter().filter(|r| r.has(flag)).count();
    Ok(Summary {
        config: plan.entries().into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
        algorithm: trace.kind,
        seed: plan.seed,
        horizon: plan.horizon,
        steps,
        objective: prep.objective.kind_name().to_string(),
        lipschitz: prep.lipschitz,
        f_star,
        final_y_plus: trace.final_incumbent(),
        regret: RegretTotals {
            active: trace.regret,
            standard: total(RegretDefinition::Standard),
            asymptotic: total(RegretDefinition::Asymptotic),
            improvement: total(RegretDefinition::Improvement),
        },
        info_gain,
        gamma_hat,
        checks: Checks {
            variance_sum: variance_sum_check(&trace.records, plan.sigma)?,
            trajectory: trajectory_coverage(&trace.records, &prep.params),
            info_gain_within_gamma: info_gain <= gamma_hat + 1e-12,
        },
        flags: Flags {
            stopped_early: trace.stopped_early,
            grid_capped_steps: count(RecordFlag::GridCapped),
            ts_chunked_steps: count(RecordFlag::TsChunked),
            bound_satisfied: bounds.satisfied(),
            violations: crate::trace_csv::invariant_violations(&trace.records),
        },
        bounds,
    })
}

/// Runs one plan (its sweep axes are ignored) and summarizes it. Pass a
/// precomputed `gamma` to share it across replications.
pub fn run_single(plan: &Plan, gamma: Option<&GammaEstimate>) -> Result<(Trace, Summary)> {
    let prep = prepare(plan)?;
    let trace = run(&prep.config, &prep.objective)?;
    let owned;
    let gamma = match gamma {
        Some(g) if g.series.len() >= trace.records.len() => g,
        _ => {
            owned = estimate_gamma(plan)?;
            &owned
        }
    };
    let summary = summarize(plan, &prep, &trace, gamma)?;
    Ok((trace, summary))
}

/// `(t, R_t, rhs_t)` for every prefix of a trace, using the bound that
/// matches the algorithm; `rhs_t` is `None` for Thompson sampling.
pub fn regret_curve(plan: &Plan, prep: &Prepared, trace: &Trace, gamma: &GammaEstimate) -> Result<Vec<(usize, f64, Option<f64>)>> {
    let mut out = Vec::with_capacity(trace.records.len());
    for t in 1..=trace.records.len() {
        let prefix = Trace {
            records: trace.records[..t].to_vec(),
            ..trace.clone()
        };
        let b = bounds_for(plan, prep, &prefix, gamma_at(gamma, t))?;
        let (lhs, rhs) = if let Some(u) = b.ucb {
            (u.lhs, Some(u.rhs))
        } else if let Some(v) = b.vei {
            (v.lhs, Some(v.rhs))
        } else if let Some(e) = b.ei {
            (e.lhs, Some(e.rhs))
        } else {
            (trace.records[t - 1].r_cum, None)
        };
        out.push((t, lhs, rhs));
    }
    Ok(out)
}
