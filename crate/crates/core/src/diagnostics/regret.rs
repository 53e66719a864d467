use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::domain::Discretization;
use crate::engine::{RegretDefinition, TraceRecord};
use crate::error::Result;
use crate::gp::GpState;
use crate::objectives::Objective;

/// `I = max(y⁺ − f(x), 0)`.
pub fn improvement(y_plus: f64, f_x: f64) -> f64 {
    (y_plus - f_x).max(0.0)
}

/// Per-step regrets and their running sum under one definition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretLedger {
    pub definition: RegretDefinition,
    pub f_star: f64,
    pub x_star: Vec<Vec<f64>>,
    pub per_step: Vec<f64>,
    pub cumulative: Vec<f64>,
}

impl RegretLedger {
    pub fn total(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }
}

/// Recomputes regrets from the `f_x` and `y_plus` columns of a trace.
pub fn regret_series(records: &[TraceRecord], f_star: f64, x_star: Vec<Vec<f64>>, definition: RegretDefinition) -> RegretLedger {
    let mut per_step = Vec::with_capacity(records.len());
    let mut cumulative = Vec::with_capacity(records.len());
    let mut prev = f64::INFINITY;
    let mut acc = 0.0;
    for rec in records {
        let r = definition.instant(f_star, rec.f_x, prev, rec.y_plus);
        acc += r;
        per_step.push(r);
        cumulative.push(acc);
        prev = rec.y_plus;
    }
    RegretLedger {
        definition,
        f_star,
        x_star,
        per_step,
        cumulative,
    }
}

/// Size of the saturated set: lattice points whose gap `f(x) − f*`
/// exceeds `ζ^{1/2} σ(x)` under `model`.
pub fn saturated_count(model: &GpState, disc: &Discretization, objective: &dyn Objective, zeta_sqrt: f64) -> Result<usize> {
    let f_star = objective.optimum().f_star;
    let mut count = 0;
    for i in 0..disc.len() {
        let x = disc.point(i);
        let (_, s) = model.posterior(&x)?;
        if objective.eval(&x) - f_star > zeta_sqrt * s {
            count += 1;
        }
    }
    Ok(count)
}
