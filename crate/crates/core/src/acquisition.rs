//! Acquisition functions.
//!
//! EI and VEI follow the minimization convention: the model is fit to the
//! raw observations and the incumbent is the smallest one seen. UCB and TS
//! are written for maximization; the engine fits their model to negated
//! observations.

use alloc::format;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::domain::{argmax_index, Discretization};
use crate::error::{Error, Result};
use crate::gp::GpState;
use crate::math::{exp, ln, norm_cdf, norm_pdf};
use crate::rng;
use crate::schedules::ScheduleVariant;

pub use crate::math::tau;

/// Smallest σ fed to the logarithm in `σ^α`.
pub const SIGMA_GUARD: f64 = 1e-300;

/// Default largest grid sampled jointly by TS.
pub const DEFAULT_TS_JOINT_CAP: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AcquisitionKind {
    Ucb,
    Ts,
    Ei,
    Vei,
}

impl AcquisitionKind {
    pub const ALL: [AcquisitionKind; 4] = [
        AcquisitionKind::Ucb,
        AcquisitionKind::Ts,
        AcquisitionKind::Ei,
        AcquisitionKind::Vei,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AcquisitionKind::Ucb => "ucb",
            AcquisitionKind::Ts => "ts",
            AcquisitionKind::Ei => "ei",
            AcquisitionKind::Vei => "vei",
        }
    }

    /// UCB and TS maximize; EI and VEI minimize.
    pub fn maximizes(self) -> bool {
        matches!(self, AcquisitionKind::Ucb | AcquisitionKind::Ts)
    }
}

impl fmt::Display for AcquisitionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AcquisitionKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        AcquisitionKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::config("acq.kind", format!("unknown acquisition `{s}` (expected ucb, ts, ei or vei)")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThetaMode {
    /// Use the configured constant θ.
    #[default]
    Fixed,
    /// Use θ_t = β_t^{1/2} from the VEI schedule at every step.
    ScheduleMin,
}

impl FromStr for ThetaMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fixed" => Ok(ThetaMode::Fixed),
            "schedule_min" => Ok(ThetaMode::ScheduleMin),
            _ => Err(Error::config("acq.theta_mode", format!("expected fixed or schedule_min, got `{s}`"))),
        }
    }
}

impl fmt::Display for ThetaMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ThetaMode::Fixed => "fixed",
            ThetaMode::ScheduleMin => "schedule_min",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AcquisitionSpec {
    pub kind: AcquisitionKind,
    /// Exponent on σ for EI/VEI, in `(0, 1]`.
    pub alpha: f64,
    /// VEI exploration weight in fixed mode.
    pub theta: Option<f64>,
    pub theta_mode: ThetaMode,
    /// Reject a fixed θ below the schedule's `β_T^{1/2}`.
    pub strict: bool,
    /// Confidence width recorded for UCB and EI.
    pub variant: ScheduleVariant,
    /// Largest TS grid sampled jointly; larger grids are sampled in
    /// independent chunks.
    pub ts_joint_cap: usize,
}

impl AcquisitionSpec {
    pub fn new(kind: AcquisitionKind) -> Self {
        AcquisitionSpec {
            kind,
            alpha: 1.0,
            theta: None,
            theta_mode: ThetaMode::Fixed,
            strict: false,
            variant: ScheduleVariant::Compact,
            ts_joint_cap: DEFAULT_TS_JOINT_CAP,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::config("acq.alpha", format!("must lie in (0, 1], got {}", self.alpha)));
        }
        if self.kind == AcquisitionKind::Vei && self.theta_mode == ThetaMode::Fixed {
            match self.theta {
                None => return Err(Error::config("acq.theta", "VEI with theta_mode = fixed needs acq.theta")),
                Some(t) if !(t >= 0.0) || !t.is_finite() => {
                    return Err(Error::config("acq.theta", format!("must be finite and ≥ 0, got {t}")))
                }
                _ => {}
            }
        }
        if self.ts_joint_cap == 0 {
            return Err(Error::config("ts.joint_cap", "must be at least 1"));
        }
        Ok(())
    }
}

/// Best observation so far (minimization).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Incumbent {
    pub y_plus: f64,
    pub x_plus: Vec<f64>,
}

impl Incumbent {
    /// Smallest observation in `state`, ties to the earliest.
    pub fn from_state(state: &GpState) -> Option<Self> {
        let ys = state.observations();
        let mut best = 0;
        for (i, &y) in ys.iter().enumerate() {
            if y < ys[best] {
                best = i;
            }
        }
        ys.get(best).map(|&y| Incumbent {
            y_plus: y,
            x_plus: state.points()[best].clone(),
        })
    }

    pub fn observe(&mut self, x: &[f64], y: f64) {
        if y < self.y_plus {
            self.y_plus = y;
            self.x_plus = x.to_vec();
        }
    }
}

/// `σ^α`, with exact zero preserved.
pub fn sigma_pow(sigma: f64, alpha: f64) -> f64 {
    if sigma <= 0.0 {
        0.0
    } else if alpha == 1.0 {
        sigma
    } else {
        exp(alpha * ln(sigma.max(SIGMA_GUARD)))
    }
}

/// EI in terms of `a = y⁺ − μ` and `b = σ^α`.
pub fn ei_from_parts(a: f64, b: f64) -> f64 {
    if b <= 0.0 {
        return a.max(0.0);
    }
    let z = a / b;
    (a * norm_cdf(z) + b * norm_pdf(z)).max(0.0)
}

/// `μ_t(x) + β^{1/2} σ_t(x)`.
pub fn ucb_value(state: &GpState, x: &[f64], beta_sqrt: f64) -> Result<f64> {
    let (m, s) = state.posterior(x)?;
    Ok(m + beta_sqrt * s)
}

pub fn ei_value(state: &GpState, x: &[f64], incumbent: &Incumbent, alpha: f64) -> Result<f64> {
    let (m, s) = state.posterior(x)?;
    Ok(ei_from_parts(incumbent.y_plus - m, sigma_pow(s, alpha)))
}

/// `EI_t(x, α) + θ σ_t^α(x)`.
pub fn vei_value(state: &GpState, x: &[f64], incumbent: &Incumbent, alpha: f64, theta: f64) -> Result<f64> {
    let (m, s) = state.posterior(x)?;
    let b = sigma_pow(s, alpha);
    Ok(ei_from_parts(incumbent.y_plus - m, b) + theta * b)
}

/// Outcome of one Thompson step.
#[derive(Debug, Clone, PartialEq)]
pub struct TsSelection {
    pub index: usize,
    pub point: Vec<f64>,
    /// Sampled value at the chosen point.
    pub value: f64,
    /// Whether the grid was sampled in independent chunks.
    pub chunked: bool,
}

/// Draws a posterior sample on the lattice with covariance scaled by `nu`
/// and returns its maximizer, ties to the smallest index.
pub fn ts_select(state: &GpState, disc: &Discretization, nu: f64, seed: u64, joint_cap: usize) -> Result<TsSelection> {
    let n = disc.len();
    if n == 0 {
        return Err(Error::invalid("empty lattice"));
    }
    let cap = joint_cap.max(1);
    let chunked = n > cap;
    let mut values = Vec::with_capacity(n);
    let mut seeds = rng::from_seed(seed);
    let mut start = 0;
    while start < n {
        let end = (start + cap).min(n);
        let pts: Vec<Vec<f64>> = (start..end).map(|i| disc.point(i)).collect();
        let chunk_seed = if chunked { rng::child_seed(&mut seeds) } else { seed };
        values.extend(state.sample_on_set(&pts, nu, chunk_seed)?);
        start = end;
    }
    let index = argmax_index(&values)?;
    Ok(TsSelection {
        index,
        point: disc.point(index),
        value: values[index],
        chunked,
    })
}
