//! Closed-form exploration schedules and analysis constants.

use alloc::format;
use alloc::string::String;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{self, ln, ln_1p, norm_cdf, norm_pdf, powf, sqrt, tau, INV_SQRT_2PI};

/// Inflation factor for EI confidence widths.
pub const C3: f64 = 1.328;
/// VEI tail constant.
pub const C_ALPHA: f64 = 1.09;
/// VEI exponent constant.
pub const C_BETA: f64 = 0.427;
/// Upper limit on δ for the time-varying VEI schedule.
pub const VEI_DELTA_MAX: f64 = 0.698;
/// Upper limit on δ for the fixed EI convergence schedule.
pub const EI_STAR_DELTA_MAX: f64 = 0.425;

/// Which union bound a confidence width is built on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleVariant {
    /// One fixed point and time: `2 ln(1/δ)`.
    Pointwise,
    /// Union over time at the sampled points: `2 ln(π_t/δ)`.
    TimeOnly,
    /// Union over the nominal lattice and time:
    /// `2 ln(π_t/δ) + 2d ln(1 + r t² L)`.
    Discrete,
    /// Regret-bound width, splitting δ between lattice and optimum:
    /// `2 ln(2π_t/δ) + 2d ln(1 + r t² L)`.
    Compact,
}

impl ScheduleVariant {
    pub const ALL: [ScheduleVariant; 4] = [
        ScheduleVariant::Pointwise,
        ScheduleVariant::TimeOnly,
        ScheduleVariant::Discrete,
        ScheduleVariant::Compact,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScheduleVariant::Pointwise => "pointwise",
            ScheduleVariant::TimeOnly => "time_only",
            ScheduleVariant::Discrete => "discrete",
            ScheduleVariant::Compact => "compact",
        }
    }
}

impl fmt::Display for ScheduleVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScheduleVariant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ScheduleVariant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| {
                Error::config(
                    "schedule.variant",
                    format!("unknown variant `{s}` (expected pointwise, time_only, discrete or compact)"),
                )
            })
    }
}

/// Multiplicity of the lattice term in the VEI schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VeiLogFactor {
    /// `c_β⁻¹ ln(1 + r t² L)`.
    #[default]
    One,
    /// `d · c_β⁻¹ ln(1 + r t² L)`.
    Dimension,
}

impl FromStr for VeiLogFactor {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "one" | "1" => Ok(VeiLogFactor::One),
            "d" | "dimension" => Ok(VeiLogFactor::Dimension),
            _ => Err(Error::config("schedule.vei_log_factor", format!("expected `one` or `d`, got `{s}`"))),
        }
    }
}

impl fmt::Display for VeiLogFactor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VeiLogFactor::One => "one",
            VeiLogFactor::Dimension => "d",
        })
    }
}

/// Problem constants shared by every schedule.
#[derive(Debug, Clone, Copy)]
pub struct ScheduleParams {
    /// RKHS norm bound `B ≥ 1`.
    pub b: f64,
    pub delta: f64,
    /// Model noise `σ > 0`.
    pub sigma: f64,
    /// True noise `σ_ε ≥ 0`.
    pub sigma_eps: f64,
    pub d: usize,
    pub r: f64,
    pub lipschitz: f64,
    pub vei_log_factor: VeiLogFactor,
    /// Summable weights with `Σ 1/π_t = 1`.
    pub pi: fn(usize) -> f64,
}

impl ScheduleParams {
    pub fn new(b: f64, delta: f64, sigma: f64, sigma_eps: f64, d: usize, r: f64, lipschitz: f64) -> Result<Self> {
        let p = ScheduleParams {
            b,
            delta,
            sigma,
            sigma_eps,
            d,
            r,
            lipschitz,
            vei_log_factor: VeiLogFactor::One,
            pi: math::pi_t,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.b >= 1.0) || !self.b.is_finite() {
            return Err(Error::config("schedule.B", format!("norm bound must be ≥ 1, got {}", self.b)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::config("schedule.delta", format!("must lie in (0, 1), got {}", self.delta)));
        }
        if !(self.sigma > 0.0) || !self.sigma.is_finite() {
            return Err(Error::config("schedule.sigma", format!("must be positive, got {}", self.sigma)));
        }
        if !(self.sigma_eps >= 0.0) || !self.sigma_eps.is_finite() {
            return Err(Error::config("schedule.sigma_eps", format!("must be non-negative, got {}", self.sigma_eps)));
        }
        if self.d == 0 {
            return Err(Error::config("domain.d", "dimension must be at least 1"));
        }
        if !(self.r > 0.0) {
            return Err(Error::config("domain.r", "edge length must be positive"));
        }
        if !(self.lipschitz > 0.0) {
            return Err(Error::config("lipschitz", "must be positive"));
        }
        Ok(())
    }

    /// `c_σ = σ_ε / σ`.
    pub fn c_sigma(&self) -> f64 {
        self.sigma_eps / self.sigma
    }

    pub fn pi_t(&self, t: usize) -> f64 {
        (self.pi)(t)
    }

    /// `ln(1 + r t² L)`.
    pub fn lattice_log(&self, t: usize) -> f64 {
        let t = t as f64;
        ln_1p(self.r * t * t * self.lipschitz)
    }

    /// The quantity under the square root for a confidence variant.
    pub fn confidence_log_term(&self, variant: ScheduleVariant, t: usize) -> f64 {
        let pi = self.pi_t(t);
        let lattice = 2.0 * self.d as f64 * self.lattice_log(t);
        match variant {
            ScheduleVariant::Pointwise => 2.0 * ln(1.0 / self.delta),
            ScheduleVariant::TimeOnly => 2.0 * ln(pi / self.delta),
            ScheduleVariant::Discrete => 2.0 * ln(pi / self.delta) + lattice,
            ScheduleVariant::Compact => 2.0 * ln(2.0 * pi / self.delta) + lattice,
        }
    }

    /// `B + c_σ √(...)` for the given variant.
    pub fn beta_sqrt(&self, variant: ScheduleVariant, t: usize) -> f64 {
        self.b + self.c_sigma() * sqrt(self.confidence_log_term(variant, t))
    }

    /// UCB regret-bound schedule `β_t^{1/2}`.
    pub fn beta_ucb(&self, t: usize) -> f64 {
        self.beta_sqrt(ScheduleVariant::Compact, t)
    }

    /// Finite-set schedule with an explicit cardinality `|C|`.
    pub fn beta_discrete(&self, t: usize, cardinality: f64) -> f64 {
        self.b + self.c_sigma() * sqrt(2.0 * ln(cardinality * self.pi_t(t) / self.delta))
    }

    /// Thompson sampling scale `ν_t^{1/2}`.
    pub fn nu_sqrt(&self, t: usize) -> f64 {
        let lattice = 2.0 * self.d as f64 * self.lattice_log(t);
        self.b + sqrt(2.0 * ln(2.0 * self.pi_t(t) / self.delta) + lattice)
    }

    /// `c_t = √(2d ln((1 + r L t²) t²))`.
    pub fn c_t(&self, t: usize) -> f64 {
        let tf = t as f64;
        sqrt(2.0 * self.d as f64 * (self.lattice_log(t) + 2.0 * ln(tf)))
    }

    /// `(c_t, ζ_t^{1/2})` with `ζ_t^{1/2} = ν_t^{1/2}(1 + c_t)`.
    pub fn zeta_sqrt(&self, t: usize) -> (f64, f64) {
        let c = self.c_t(t);
        (c, self.nu_sqrt(t) * (1.0 + c))
    }

    /// EI confidence width `c₃ (B + c_σ √(...))`.
    pub fn ei_beta_sqrt(&self, variant: ScheduleVariant, t: usize) -> f64 {
        C3 * self.beta_sqrt(variant, t)
    }

    /// Time-varying VEI `(β_t^{1/2}, θ_min)`.
    pub fn vei(&self, t: usize) -> Result<(f64, f64)> {
        if self.delta >= VEI_DELTA_MAX {
            return Err(Error::config(
                "schedule.delta",
                format!("VEI schedule requires δ < {VEI_DELTA_MAX}, got {}", self.delta),
            ));
        }
        let head = (ln(2.0 * self.pi_t(t) * C_ALPHA / self.delta) / C_BETA).max(1.0);
        let mult = match self.vei_log_factor {
            VeiLogFactor::One => 1.0,
            VeiLogFactor::Dimension => self.d as f64,
        };
        let beta = head + mult * self.lattice_log(t) / C_BETA;
        let s = sqrt(beta);
        Ok((s, s))
    }

    /// Constant VEI `β` for convergence runs.
    pub fn vei_fixed_beta(&self) -> f64 {
        (ln(2.0 * C_ALPHA / self.delta) / C_BETA).max(1.0)
    }

    /// Constant `β` for EI convergence.
    pub fn ei_star_beta(&self) -> Result<f64> {
        if self.delta >= EI_STAR_DELTA_MAX {
            return Err(Error::config(
                "schedule.delta",
                format!("requires δ < {EI_STAR_DELTA_MAX}, got {}", self.delta),
            ));
        }
        Ok((ln(3.0 * C_ALPHA / self.delta) / C_BETA).max(1.0))
    }
}

/// `C_γ = 8 / ln(1 + σ⁻²)`.
pub fn c_gamma(sigma: f64) -> f64 {
    8.0 / ln_1p(1.0 / (sigma * sigma))
}

/// TS anti-concentration probability `1 / (4e√π)`.
pub fn ts_probability() -> f64 {
    1.0 / (4.0 * core::f64::consts::E * sqrt(core::f64::consts::PI))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    pub c_gamma: f64,
    pub p: f64,
    pub phi0: f64,
}

pub fn constants(sigma: f64) -> Constants {
    Constants {
        c_gamma: c_gamma(sigma),
        p: ts_probability(),
        phi0: INV_SQRT_2PI,
    }
}

/// Constants governing EI convergence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceConstants {
    pub c1: f64,
    pub c2: f64,
    pub w: f64,
    pub alpha: f64,
    pub beta_sqrt: f64,
}

impl ConvergenceConstants {
    pub fn c3(&self) -> f64 {
        self.c2 - self.beta_sqrt
    }

    /// Constants given `C₃` directly.
    pub fn from_c3(c1: f64, c3: f64, w: f64, alpha: f64, beta_sqrt: f64) -> Self {
        ConvergenceConstants {
            c1,
            c2: c3 + beta_sqrt,
            w,
            alpha,
            beta_sqrt,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionCheck {
    pub ok: bool,
    /// `lhs − rhs`; positive when the strict inequality holds.
    pub margin: f64,
    pub lhs: f64,
    pub rhs: f64,
}

impl ConditionCheck {
    fn new(lhs: f64, rhs: f64) -> Self {
        ConditionCheck {
            ok: lhs > rhs,
            margin: lhs - rhs,
            lhs,
            rhs,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantsReport {
    pub constants: ConvergenceConstants,
    pub c3: f64,
    /// `(C₃/w)^α τ(−w) > w τ(0)`.
    pub a_statement: ConditionCheck,
    /// `(C₃/w)^α τ(−w) > τ(0)`.
    pub a_proof: ConditionCheck,
    /// `C₂ > β^{1/2} + w`.
    pub b: ConditionCheck,
    /// `C₁ Φ(−w) > 1`.
    pub c: ConditionCheck,
    /// `min_x τ(C₃x − w) − x τ(0) > 0` on `(0, w/C₃)`.
    pub d: ConditionCheck,
    pub d_worst_x: f64,
    pub d_samples: usize,
    /// `1 − √(π/2) φ(w)`.
    pub probability: f64,
    pub all_ok_statement: bool,
    pub all_ok_proof: bool,
    pub note: String,
}

/// Numerically checks conditions (a) to (d) on the EI convergence constants.
pub fn check_ei_constants(c: ConvergenceConstants, samples: usize) -> Result<ConstantsReport> {
    if samples < 100 {
        return Err(Error::invalid("condition (d) needs at least 100 samples"));
    }
    if !(c.alpha > 0.0 && c.alpha <= 1.0) {
        return Err(Error::invalid(format!("α must lie in (0, 1], got {}", c.alpha)));
    }
    if !(c.w > 0.0) {
        return Err(Error::invalid(format!("w must be positive, got {}", c.w)));
    }
    let c3 = c.c3();
    let tau0 = INV_SQRT_2PI;
    let a_lhs = powf(c3 / c.w, c.alpha) * tau(-c.w);
    let a_statement = ConditionCheck::new(a_lhs, c.w * tau0);
    let a_proof = ConditionCheck::new(a_lhs, tau0);
    let b = ConditionCheck::new(c.c2, c.beta_sqrt + c.w);
    let cc = ConditionCheck::new(c.c1 * norm_cdf(-c.w), 1.0);

    let (d_min, d_x) = if c3 > 0.0 {
        let upper = c.w / c3;
        let g = |x: f64| tau(c3 * x - c.w) - x * tau0;
        // endpoint limits
        let mut best = (g(0.0), 0.0);
        let end = g(upper);
        if end < best.0 {
            best = (end, upper);
        }
        for k in 1..=samples {
            let x = upper * k as f64 / (samples + 1) as f64;
            let v = g(x);
            if v < best.0 {
                best = (v, x);
            }
        }
        best
    } else {
        (f64::NEG_INFINITY, 0.0)
    };
    let d = ConditionCheck::new(d_min, 0.0);
    let all_ok_statement = a_statement.ok && b.ok && cc.ok && d.ok;
    let all_ok_proof = a_proof.ok && b.ok && cc.ok && d.ok;
    Ok(ConstantsReport {
        constants: c,
        c3,
        a_statement,
        a_proof,
        b,
        c: cc,
        d,
        d_worst_x: d_x,
        d_samples: samples,
        probability: 1.0 - sqrt(core::f64::consts::FRAC_PI_2) * norm_pdf(c.w),
        all_ok_statement,
        all_ok_proof,
        note: String::from(
            "condition (a) is reported in two forms: right side w·τ(0) and right side τ(0)",
        ),
    })
}
