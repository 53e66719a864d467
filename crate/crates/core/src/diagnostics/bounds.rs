use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::engine::{RegretDefinition, Trace};
use crate::error::Result;
use crate::gp::GpState;
use crate::kernels::KernelSpec;
use crate::math::{exp, floor, powf, sqrt};
use crate::objectives::Optimum;
use crate::schedules::{c_gamma, ScheduleParams, ScheduleVariant};

use super::regret::regret_series;

/// Constants of the lower bound on `I − EI`.
pub const FNU_C1: f64 = 0.4;
pub const FNU_C2: f64 = 0.21;

/// Upper bound on `I_t(x) − EI_t(x)` for any `w > 0`.
pub fn fandnu_upper(y_plus: f64, f_x: f64, mu: f64, sigma: f64, w: f64) -> f64 {
    if y_plus - f_x <= 0.0 {
        sigma * w
    } else {
        mu - f_x
    }
}

/// Lower bound on `I_t(x) − EI_t(x)` valid when `w > 1` and
/// `f(x) − μ_t(x) < σ_t(x) w`.
pub fn fnu_lower(sigma: f64, w: f64) -> f64 {
    -sigma * w - sigma * FNU_C1 * exp(-FNU_C2 * w * w)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UcbBound {
    pub horizon: usize,
    /// Cumulative standard regret.
    pub lhs: f64,
    pub beta: f64,
    pub c1: f64,
    /// Greedy estimate, not the exact maximum information gain.
    pub gamma_hat: f64,
    pub info_gain: f64,
    /// `√(C₁ T β_T γ̂_T) + 2`.
    pub rhs: f64,
    /// Same with `γ` replaced by the run's own information gain.
    pub rhs_info_gain: f64,
    pub satisfied: bool,
    pub satisfied_info_gain: bool,
}

pub fn bound_ucb(trace: &Trace, params: &ScheduleParams, gamma_hat: f64) -> UcbBound {
    let horizon = trace.records.len();
    let lhs = regret_series(&trace.records, trace.f_star, Vec::new(), RegretDefinition::Standard).total();
    let beta = if horizon == 0 {
        0.0
    } else {
        let b = params.beta_ucb(horizon);
        b * b
    };
    let c1 = c_gamma(params.sigma);
    let info = trace.info_gain();
    let rhs = sqrt(c1 * horizon as f64 * beta * gamma_hat) + 2.0;
    let rhs_info_gain = sqrt(c1 * horizon as f64 * beta * info) + 2.0;
    UcbBound {
        horizon,
        lhs,
        beta,
        c1,
        gamma_hat,
        info_gain: info,
        rhs,
        rhs_info_gain,
        satisfied: lhs <= rhs,
        satisfied_info_gain: lhs <= rhs_info_gain,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VeiBound {
    pub horizon: usize,
    /// Cumulative improvement-based regret.
    pub lhs: f64,
    pub beta: f64,
    pub c_gamma: f64,
    pub gamma_hat: f64,
    pub alpha: f64,
    pub theta: f64,
    /// Headline form with coefficient `0.4`.
    pub rhs: f64,
    /// Proof form with coefficient `0.4 + θ`.
    pub rhs_theta: f64,
    pub satisfied: bool,
    pub satisfied_theta: bool,
}

pub fn bound_vei(trace: &Trace, params: &ScheduleParams, gamma_hat: f64, alpha: f64, theta: f64) -> Result<VeiBound> {
    let horizon = trace.records.len().max(1);
    let lhs = regret_series(&trace.records, trace.f_star, Vec::new(), RegretDefinition::Improvement).total();
    let (bs, _) = params.vei(horizon)?;
    let cg = c_gamma(params.sigma);
    let tf = horizon as f64;
    let head = 0.5 * bs * sqrt(cg * tf * gamma_hat);
    let tail = powf(0.25 * cg * gamma_hat, 0.5 * alpha) * powf(tf, 0.5 * (2.0 - alpha));
    let rhs = head + 0.4 * tail + 2.0;
    let rhs_theta = head + (0.4 + theta) * tail + 2.0;
    Ok(VeiBound {
        horizon,
        lhs,
        beta: bs * bs,
        c_gamma: cg,
        gamma_hat,
        alpha,
        theta,
        rhs,
        rhs_theta,
        satisfied: lhs <= rhs,
        satisfied_theta: lhs <= rhs_theta,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EiBound {
    pub horizon: usize,
    /// Cumulative improvement-based regret.
    pub lhs: f64,
    pub beta_sqrt: f64,
    pub c1: f64,
    pub gamma_hat: f64,
    /// `½ (0.4 + β_T^{1/2}) (C₁ T γ̂_T)^{1/2}`.
    pub head: f64,
    /// `Σ β_t^{1/2} σ_{t−1}(x*)`, minimized over known minimizers.
    pub sigma_star_sum: f64,
    /// Estimated `Σ β_t^{1/2} L^σ_t / (L t²)`.
    pub m_h: f64,
    pub rhs: f64,
    pub satisfied: bool,
}

/// Largest central-difference gradient norm of `σ_t(·)` over an
/// `n^d` lattice.
pub fn sigma_lipschitz(model: &GpState, d: usize, r: f64, per_axis: usize) -> Result<f64> {
    let n = per_axis.max(2);
    let total = powf(n as f64, d as f64) as usize;
    let h = 1e-5 * r;
    let mut best: f64 = 0.0;
    let mut x = vec![0.0; d];
    for idx in 0..total {
        let mut rem = idx;
        for i in (0..d).rev() {
            x[i] = r * (rem % n) as f64 / (n - 1) as f64;
            rem /= n;
        }
        let mut g2 = 0.0;
        for i in 0..d {
            let c = x[i];
            let lo = (c - h).max(0.0);
            let hi = (c + h).min(r);
            x[i] = hi;
            let sh = model.posterior(&x)?.1;
            x[i] = lo;
            let sl = model.posterior(&x)?.1;
            x[i] = c;
            let g = (sh - sl) / (hi - lo);
            g2 += g * g;
        }
        best = best.max(sqrt(g2));
    }
    Ok(best)
}

/// Replays the trace's models to evaluate the EI regret bound.
/// `probe_budget` caps the lattice used for each `L^σ_t` estimate.
pub fn bound_ei(trace: &Trace, params: &ScheduleParams, kernel: &KernelSpec, optimum: &Optimum, gamma_hat: f64, probe_budget: usize) -> Result<EiBound> {
    let horizon = trace.records.len().max(1);
    let lhs = regret_series(&trace.records, trace.f_star, Vec::new(), RegretDefinition::Improvement).total();
    let d = params.d;
    let per_axis = (floor(powf(probe_budget.max(2) as f64, 1.0 / d as f64) + 1e-9) as usize).max(2);
    let mut model = GpState::new(*kernel, params.sigma)?;
    let mut star_sums = vec![0.0; optimum.x_star.len().max(1)];
    let mut m_h = 0.0;
    for (i, rec) in trace.records.iter().enumerate() {
        let t = i + 1;
        let bt = params.ei_beta_sqrt(ScheduleVariant::Compact, t);
        for (k, xs) in optimum.x_star.iter().enumerate() {
            star_sums[k] += bt * model.posterior(xs)?.1;
        }
        let ls = sigma_lipschitz(&model, d, params.r, per_axis)?;
        let tf = t as f64;
        m_h += bt * ls / (params.lipschitz * tf * tf);
        model.push(rec.x.clone(), rec.y)?;
    }
    let sigma_star_sum = star_sums.iter().copied().fold(f64::INFINITY, f64::min);
    let beta_sqrt = params.ei_beta_sqrt(ScheduleVariant::Compact, horizon);
    let c1 = c_gamma(params.sigma);
    let head = 0.5 * (0.4 + beta_sqrt) * sqrt(c1 * horizon as f64 * gamma_hat);
    let rhs = head + sigma_star_sum + m_h + 2.0;
    Ok(EiBound {
        horizon,
        lhs,
        beta_sqrt,
        c1,
        gamma_hat,
        head,
        sigma_star_sum,
        m_h,
        rhs,
        satisfied: lhs <= rhs,
    })
}
