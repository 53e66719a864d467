use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use alloc::format;
use serde::{Deserialize, Serialize};

use crate::acquisition::ei_from_parts;
use crate::domain::BoxDomain;
use crate::engine::TraceRecord;
use crate::error::{Error, Result};
use crate::gp::GpState;
use crate::kernels::KernelSpec;
use crate::math::sqrt;
use crate::objectives::make_rkhs;
use crate::rng;
use crate::schedules::{ScheduleParams, ScheduleVariant};

/// Two-sided 99% normal quantile.
pub const WILSON_Z99: f64 = 2.575_829_303_548_901;

/// Absolute slack absorbing round-off in the inequality checks.
const FLOAT_SLACK: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoverageKind {
    /// `|f(x) − μ_t(x)| ≤ β^{1/2} σ_t(x)` at one pre-drawn `(x, t)`.
    Pointwise,
    /// `|I_t(x) − EI_t(x)| ≤ β^{1/2} σ_t(x)` at one pre-drawn `(x, t)`.
    EiGap,
    /// The pointwise inequality at every lattice point and every step.
    Union,
}

impl CoverageKind {
    pub const ALL: [CoverageKind; 3] = [CoverageKind::Pointwise, CoverageKind::EiGap, CoverageKind::Union];

    pub fn name(self) -> &'static str {
        match self {
            CoverageKind::Pointwise => "pointwise",
            CoverageKind::EiGap => "ei_gap",
            CoverageKind::Union => "union",
        }
    }
}

impl fmt::Display for CoverageKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CoverageKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pointwise" | "pointwise_error" => Ok(CoverageKind::Pointwise),
            "ei_gap" => Ok(CoverageKind::EiGap),
            "union" => Ok(CoverageKind::Union),
            _ => Err(Error::invalid(format!("unknown coverage kind `{s}` (expected pointwise, ei_gap or union)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverageParams {
    pub kind: CoverageKind,
    pub kernel: KernelSpec,
    pub d: usize,
    pub r: f64,
    pub b: f64,
    pub delta: f64,
    pub sigma: f64,
    pub sigma_eps: f64,
    /// Centers per RKHS objective.
    pub centers: usize,
    /// Observations per replication are drawn uniformly from `1..=max_obs`.
    pub max_obs: usize,
    pub replications: usize,
    pub seed: u64,
    /// Lattice points per axis for the union kind.
    pub union_axis: usize,
}

impl CoverageParams {
    pub fn new(kind: CoverageKind, kernel: KernelSpec, delta: f64, replications: usize, seed: u64) -> Self {
        CoverageParams {
            kind,
            kernel,
            d: 1,
            r: 1.0,
            b: 1.0,
            delta,
            sigma: 0.1,
            sigma_eps: 0.1,
            centers: 10,
            max_obs: 20,
            replications,
            seed,
            union_axis: 21,
        }
    }

    fn schedule(&self) -> Result<ScheduleParams> {
        ScheduleParams::new(self.b, self.delta, self.sigma, self.sigma_eps, self.d, self.r, 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverageOutcome {
    pub violated: bool,
    /// Smallest `rhs − lhs` over the checks made.
    pub margin: f64,
    pub observations: usize,
}

/// One independent replication: fresh objective, fresh noise, fresh design.
pub fn coverage_replication(p: &CoverageParams, index: usize) -> Result<CoverageOutcome> {
    let sched = p.schedule()?;
    let domain = BoxDomain::new(p.d, p.r, 1.0)?;
    let mut rng = rng::replication(p.seed, index as u64);
    let f = make_rkhs(p.kernel, p.d, p.r, p.centers, p.b, rng::child_seed(&mut rng))?;
    let t = 1 + (rng::uniform(&mut rng) * p.max_obs.max(1) as f64) as usize;
    let t = t.min(p.max_obs.max(1));
    let xs: Vec<Vec<f64>> = (0..t).map(|_| domain.sample_uniform(&mut rng)).collect();
    let ys: Vec<f64> = xs.iter().map(|x| f.eval(x) + p.sigma_eps * rng::normal(&mut rng)).collect();
    let probe = domain.sample_uniform(&mut rng);

    match p.kind {
        CoverageKind::Pointwise | CoverageKind::EiGap => {
            let model = GpState::from_data(p.kernel, p.sigma, xs, ys.clone())?;
            let (mu, s) = model.posterior(&probe)?;
            let fx = f.eval(&probe);
            let (lhs, beta) = if p.kind == CoverageKind::Pointwise {
                ((fx - mu).abs(), sched.beta_sqrt(ScheduleVariant::Pointwise, t))
            } else {
                let y_plus = ys.iter().copied().fold(f64::INFINITY, f64::min);
                let gap = (y_plus - fx).max(0.0) - ei_from_parts(y_plus - mu, s);
                (gap.abs(), sched.ei_beta_sqrt(ScheduleVariant::Pointwise, t))
            };
            let margin = beta * s - lhs;
            Ok(CoverageOutcome {
                violated: margin < -FLOAT_SLACK,
                margin,
                observations: t,
            })
        }
        CoverageKind::Union => {
            let n = p.union_axis.max(2);
            let grid: Vec<Vec<f64>> = {
                let total = (0..p.d).fold(1usize, |a, _| a * n);
                (0..total)
                    .map(|idx| {
                        let mut x = alloc::vec![0.0; p.d];
                        let mut rem = idx;
                        for i in (0..p.d).rev() {
                            x[i] = p.r * (rem % n) as f64 / (n - 1) as f64;
                            rem /= n;
                        }
                        x
                    })
                    .collect()
            };
            let truth: Vec<f64> = grid.iter().map(|x| f.eval(x)).collect();
            let mut model = GpState::new(p.kernel, p.sigma)?;
            let mut margin = f64::INFINITY;
            for s in 1..=t {
                let beta = sched.beta_discrete(s, grid.len() as f64);
                for (x, fx) in grid.iter().zip(&truth) {
                    let (mu, sd) = model.posterior(x)?;
                    margin = margin.min(beta * sd - (fx - mu).abs());
                }
                model.push(xs[s - 1].clone(), ys[s - 1])?;
            }
            Ok(CoverageOutcome {
                violated: margin < -FLOAT_SLACK,
                margin,
                observations: t,
            })
        }
    }
}

/// Wilson score interval for a binomial proportion.
pub fn wilson_interval(successes: usize, n: usize, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let nf = n as f64;
    let p = successes as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let centre = (p + z2 / (2.0 * nf)) / denom;
    let half = z * sqrt(p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)) / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub kind: CoverageKind,
    pub replications: usize,
    pub violations: usize,
    pub rate: f64,
    pub ci99_low: f64,
    pub ci99_high: f64,
    pub delta: f64,
    /// `δ + 3 √(δ(1−δ)/N)`.
    pub tolerance: f64,
    pub within_tolerance: bool,
    pub worst_margin: f64,
}

impl CoverageReport {
    pub fn from_outcomes(p: &CoverageParams, outcomes: &[CoverageOutcome]) -> Self {
        let n = outcomes.len();
        let violations = outcomes.iter().filter(|o| o.violated).count();
        let rate = if n == 0 { 0.0 } else { violations as f64 / n as f64 };
        let (lo, hi) = wilson_interval(violations, n, WILSON_Z99);
        let tolerance = p.delta + 3.0 * sqrt(p.delta * (1.0 - p.delta) / n.max(1) as f64);
        CoverageReport {
            kind: p.kind,
            replications: n,
            violations,
            rate,
            ci99_low: lo,
            ci99_high: hi,
            delta: p.delta,
            tolerance,
            within_tolerance: rate <= tolerance,
            worst_margin: outcomes.iter().map(|o| o.margin).fold(f64::INFINITY, f64::min),
        }
    }
}

/// Runs all replications sequentially.
pub fn coverage_test(p: &CoverageParams) -> Result<CoverageReport> {
    if p.replications < 100 {
        return Err(Error::invalid("coverage studies need at least 100 replications"));
    }
    let outcomes = (0..p.replications)
        .map(|i| coverage_replication(p, i))
        .collect::<Result<Vec<_>>>()?;
    Ok(CoverageReport::from_outcomes(p, &outcomes))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryCoverage {
    pub checked: usize,
    pub violations: usize,
    pub rate: f64,
}

/// Fraction of sampled points where `|f(x_t) − μ_{t−1}(x_t)|` exceeds the
/// time-only width `β_t^{1/2} σ_{t−1}(x_t)`.
pub fn trajectory_coverage(records: &[TraceRecord], params: &ScheduleParams) -> TrajectoryCoverage {
    let mut violations = 0;
    for r in records {
        let beta = params.beta_sqrt(ScheduleVariant::TimeOnly, r.t);
        if (r.f_x - r.mu_prev).abs() > beta * r.sigma_prev + FLOAT_SLACK {
            violations += 1;
        }
    }
    let checked = records.len();
    TrajectoryCoverage {
        checked,
        violations,
        rate: if checked == 0 { 0.0 } else { violations as f64 / checked as f64 },
    }
}
