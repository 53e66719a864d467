//! The optimization loop shared by all four algorithms.

use alloc::boxed::Box;
use alloc::format;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::acquisition::{self, AcquisitionKind, AcquisitionSpec, Incumbent, ThetaMode};
use crate::domain::{maximize_acquisition, BoxDomain, OptimizerSettings, DEFAULT_GRID_CAP};
use crate::error::{Error, Result};
use crate::gp::GpState;
use crate::kernels::KernelSpec;
use crate::math::{ln_1p, sqrt};
use crate::objectives::Objective;
use crate::rng::{self, Stream};
use crate::schedules::ScheduleParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegretDefinition {
    /// `f(x_t) − f*`.
    Standard,
    /// `y⁺_t − f*`.
    Asymptotic,
    /// `max(y⁺_{t−1} − f*, 0) − max(y⁺_{t−1} − f(x_t), 0)`.
    Improvement,
}

impl RegretDefinition {
    pub const ALL: [RegretDefinition; 3] = [
        RegretDefinition::Standard,
        RegretDefinition::Asymptotic,
        RegretDefinition::Improvement,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RegretDefinition::Standard => "standard",
            RegretDefinition::Asymptotic => "asymptotic",
            RegretDefinition::Improvement => "improvement",
        }
    }

    /// Native definition for each algorithm family.
    pub fn default_for(kind: AcquisitionKind) -> Self {
        if kind.maximizes() {
            RegretDefinition::Standard
        } else {
            RegretDefinition::Improvement
        }
    }

    /// Instantaneous regret. `y_plus_prev` is `+∞` before any observation,
    /// `y_plus` includes the current one.
    pub fn instant(self, f_star: f64, f_x: f64, y_plus_prev: f64, y_plus: f64) -> f64 {
        match self {
            RegretDefinition::Standard => f_x - f_star,
            RegretDefinition::Asymptotic => y_plus - f_star,
            RegretDefinition::Improvement => {
                if y_plus_prev.is_infinite() {
                    f_x - f_star
                } else {
                    (y_plus_prev - f_star).max(0.0) - (y_plus_prev - f_x).max(0.0)
                }
            }
        }
    }
}

impl fmt::Display for RegretDefinition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RegretDefinition {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        RegretDefinition::ALL
            .into_iter()
            .find(|d| d.name() == s)
            .ok_or_else(|| Error::config("regret.definition", format!("expected standard, asymptotic or improvement, got `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum StoppingRule {
    Horizon,
    /// Stop once `y⁺` has improved by at most `tol` over the last `k` steps.
    Stall { tol: f64, k: usize },
    /// Stop once the maximized EI/VEI value drops below `tol`.
    AcqBelow { tol: f64 },
}

impl StoppingRule {
    pub fn name(&self) -> &'static str {
        match self {
            StoppingRule::Horizon => "horizon",
            StoppingRule::Stall { .. } => "stall",
            StoppingRule::AcqBelow { .. } => "acq_below",
        }
    }

    pub fn validate(&self, kind: AcquisitionKind) -> Result<()> {
        match *self {
            StoppingRule::Horizon => Ok(()),
            StoppingRule::Stall { tol, k } => {
                if !(tol >= 0.0) || k == 0 {
                    Err(Error::config("run.stop_k", "stall rule needs tol ≥ 0 and k ≥ 1"))
                } else {
                    Ok(())
                }
            }
            StoppingRule::AcqBelow { tol } => {
                if !matches!(kind, AcquisitionKind::Ei | AcquisitionKind::Vei) {
                    Err(Error::config("run.stopping", "acq_below applies only to ei and vei"))
                } else if !(tol >= 0.0) {
                    Err(Error::config("run.stop_tol", "tolerance must be ≥ 0"))
                } else {
                    Ok(())
                }
            }
        }
    }
}

/// Whether `rule` fires after the last record of `records`.
pub fn stopping(rule: &StoppingRule, records: &[TraceRecord], init: usize) -> bool {
    let Some(last) = records.last() else {
        return false;
    };
    match *rule {
        StoppingRule::Horizon => false,
        StoppingRule::Stall { tol, k } => {
            let t = last.t;
            if t < init + k || t <= k {
                return false;
            }
            let earlier = &records[t - k - 1];
            earlier.y_plus - last.y_plus <= tol
        }
        StoppingRule::AcqBelow { tol } => last.acq_value.is_some_and(|v| v < tol),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordFlag {
    /// Uniform random initialization sample.
    Init,
    /// The TS lattice hit its size cap.
    GridCapped,
    /// The TS sample was drawn in independent chunks.
    TsChunked,
    /// The stopping rule fired at this record.
    Stopped,
}

impl RecordFlag {
    pub const ALL: [RecordFlag; 4] = [
        RecordFlag::Init,
        RecordFlag::GridCapped,
        RecordFlag::TsChunked,
        RecordFlag::Stopped,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RecordFlag::Init => "init",
            RecordFlag::GridCapped => "grid_capped",
            RecordFlag::TsChunked => "ts_chunked",
            RecordFlag::Stopped => "stopped",
        }
    }
}

impl FromStr for RecordFlag {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        RecordFlag::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown record flag `{s}`")))
    }
}

/// Search direction of the acquisition relative to the objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    /// Model fit to `y`; acquisition looks for small values.
    Min,
    /// Model fit to `−y`; acquisition looks for large values.
    Max,
}

impl Orientation {
    pub fn name(self) -> &'static str {
        match self {
            Orientation::Min => "min",
            Orientation::Max => "max",
        }
    }

    fn sign(self) -> f64 {
        match self {
            Orientation::Min => 1.0,
            Orientation::Max => -1.0,
        }
    }
}

impl FromStr for Orientation {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "min" => Ok(Orientation::Min),
            "max" => Ok(Orientation::Max),
            _ => Err(Error::invalid(format!("unknown orientation `{s}`"))),
        }
    }
}

/// One evaluation. `y`, `y_plus`, `f_x` and `mu_prev` are in objective
/// units (smaller is better); `acq_value` is in the acquisition's own
/// orientation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub t: usize,
    pub x: Vec<f64>,
    pub y: f64,
    pub y_plus: f64,
    /// Posterior mean of the objective at `x` before this observation.
    pub mu_prev: f64,
    /// Posterior standard deviation at `x` before this observation.
    pub sigma_prev: f64,
    /// `β_t^{1/2}` (UCB, EI, VEI) or `ν_t^{1/2}` (TS).
    pub beta_sqrt: Option<f64>,
    pub acq_value: Option<f64>,
    pub r_inst: f64,
    pub r_cum: f64,
    pub info_gain_cum: f64,
    pub grid_size: Option<usize>,
    pub flags: Vec<RecordFlag>,
    pub f_x: f64,
    pub orientation: Orientation,
}

impl TraceRecord {
    pub fn has(&self, flag: RecordFlag) -> bool {
        self.flags.contains(&flag)
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub domain: BoxDomain,
    pub kernel: KernelSpec,
    pub acq: AcquisitionSpec,
    pub params: ScheduleParams,
    /// Total number of evaluations `T`.
    pub horizon: usize,
    /// Number of initialization samples `T₀`.
    pub init: usize,
    pub seed: u64,
    pub stopping: StoppingRule,
    pub regret: RegretDefinition,
    pub grid_cap: usize,
    pub optimizer: OptimizerSettings,
}

impl RunConfig {
    pub fn new(domain: BoxDomain, kernel: KernelSpec, acq: AcquisitionSpec, params: ScheduleParams, horizon: usize, seed: u64) -> Self {
        RunConfig {
            domain,
            kernel,
            acq,
            params,
            horizon,
            init: 1,
            seed,
            stopping: StoppingRule::Horizon,
            regret: RegretDefinition::default_for(acq.kind),
            grid_cap: DEFAULT_GRID_CAP,
            optimizer: OptimizerSettings::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.domain.validate()?;
        self.kernel.validate()?;
        self.acq.validate()?;
        self.params.validate()?;
        if self.init == 0 {
            return Err(Error::config("run.T0", "need at least one initialization sample"));
        }
        if self.horizon < self.init {
            return Err(Error::config("run.T", format!("horizon {} is below T0 = {}", self.horizon, self.init)));
        }
        if self.params.d != self.domain.d || self.params.r != self.domain.r || self.params.lipschitz != self.domain.lipschitz {
            return Err(Error::invalid("schedule and domain disagree on d, r or L"));
        }
        self.stopping.validate(self.acq.kind)?;
        if self.acq.kind == AcquisitionKind::Vei {
            if self.acq.theta_mode == ThetaMode::ScheduleMin || self.acq.strict {
                self.params.vei(self.horizon)?;
            }
            if self.acq.strict && self.acq.theta_mode == ThetaMode::Fixed {
                let need = self.params.vei(self.horizon)?.1;
                let theta = self.acq.theta.unwrap_or(0.0);
                if theta < need {
                    return Err(Error::config("acq.theta", format!("θ = {theta} is below β_T^{{1/2}} = {need}")));
                }
            }
        }
        if self.acq.kind == AcquisitionKind::Ts {
            self.domain.lattice(1, self.grid_cap)?;
        }
        Ok(())
    }

    pub fn orientation(&self) -> Orientation {
        if self.acq.kind.maximizes() {
            Orientation::Max
        } else {
            Orientation::Min
        }
    }

    /// Schedule value recorded (and, for UCB/TS/VEI, used) at step `t`.
    pub fn schedule_value(&self, t: usize) -> Result<f64> {
        let p = &self.params;
        Ok(match self.acq.kind {
            AcquisitionKind::Ucb => p.beta_sqrt(self.acq.variant, t),
            AcquisitionKind::Ts => p.nu_sqrt(t),
            AcquisitionKind::Ei => p.ei_beta_sqrt(self.acq.variant, t),
            AcquisitionKind::Vei => match p.vei(t) {
                Ok((b, _)) => b,
                Err(_) if self.acq.theta_mode == ThetaMode::Fixed => sqrt(p.vei_fixed_beta()),
                Err(e) => return Err(e),
            },
        })
    }
}

/// Output of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub records: Vec<TraceRecord>,
    pub kind: AcquisitionKind,
    pub orientation: Orientation,
    pub regret: RegretDefinition,
    pub f_star: f64,
    pub horizon: usize,
    pub init: usize,
    pub stopped_early: bool,
}

impl Trace {
    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }

    pub fn cumulative_regret(&self) -> f64 {
        self.last().map_or(0.0, |r| r.r_cum)
    }

    pub fn info_gain(&self) -> f64 {
        self.last().map_or(0.0, |r| r.info_gain_cum)
    }

    pub fn final_incumbent(&self) -> f64 {
        self.last().map_or(f64::INFINITY, |r| r.y_plus)
    }
}

/// Runs one optimization. Deterministic in `config.seed`.
pub fn run(config: &RunConfig, objective: &dyn Objective) -> Result<Trace> {
    config.validate()?;
    let domain = config.domain;
    let orientation = config.orientation();
    let sign = orientation.sign();
    let sigma = config.params.sigma;
    let sigma_eps = config.params.sigma_eps;
    let f_star = objective.optimum().f_star;

    let mut gp = GpState::new(config.kernel, sigma)?;
    let mut init_rng = rng::stream(config.seed, Stream::Init);
    let mut noise_rng = rng::stream(config.seed, Stream::Noise);
    let mut opt_rng = rng::stream(config.seed, Stream::Optimizer);
    let mut ts_rng = rng::stream(config.seed, Stream::Thompson);

    let mut records: Vec<TraceRecord> = Vec::with_capacity(config.horizon);
    let mut y_plus = f64::INFINITY;
    let mut incumbent: Option<Incumbent> = None;
    let mut r_cum = 0.0;
    let mut info = 0.0;
    let inv_var = 1.0 / (sigma * sigma);
    let mut stopped_early = false;

    for t in 1..=config.horizon {
        let mut flags = Vec::new();
        let mut beta_sqrt = None;
        let mut acq_value = None;
        let mut grid_size = None;
        let x = if t <= config.init {
            flags.push(RecordFlag::Init);
            domain.sample_uniform(&mut init_rng)
        } else {
            let b = config.schedule_value(t)?;
            beta_sqrt = Some(b);
            let (x, v) = match config.acq.kind {
                AcquisitionKind::Ts => {
                    let disc = domain.lattice(t, config.grid_cap)?;
                    if disc.capped {
                        flags.push(RecordFlag::GridCapped);
                    }
                    grid_size = Some(disc.len());
                    let sel = acquisition::ts_select(&gp, &disc, b * b, rng::child_seed(&mut ts_rng), config.acq.ts_joint_cap)?;
                    if sel.chunked {
                        flags.push(RecordFlag::TsChunked);
                    }
                    (sel.point, sel.value)
                }
                AcquisitionKind::Ucb => {
                    let g = &gp;
                    maximize_acquisition(|x| acquisition::ucb_value(g, x, b), &domain, config.optimizer, rng::child_seed(&mut opt_rng))?
                }
                AcquisitionKind::Ei | AcquisitionKind::Vei => {
                    let inc = incumbent.as_ref().expect("initialization precedes acquisition");
                    let alpha = config.acq.alpha;
                    let theta = match (config.acq.kind, config.acq.theta_mode) {
                        (AcquisitionKind::Ei, _) => 0.0,
                        (_, ThetaMode::Fixed) => config.acq.theta.unwrap_or(0.0),
                        (_, ThetaMode::ScheduleMin) => config.params.vei(t)?.1,
                    };
                    let g = &gp;
                    maximize_acquisition(
                        |x| acquisition::vei_value(g, x, inc, alpha, theta),
                        &domain,
                        config.optimizer,
                        rng::child_seed(&mut opt_rng),
                    )?
                }
            };
            acq_value = Some(v);
            x
        };

        let (mu_model, sd) = gp.posterior(&x)?;
        let f_x = objective.eval(&x);
        if f_x.is_nan() {
            return Err(Error::ObjectiveNan { x });
        }
        let y = f_x + sigma_eps * rng::normal(&mut noise_rng);
        let before = gp.dump();
        if let Err(e) = gp.push(x.clone(), sign * y) {
            return Err(Error::ModelFailure {
                t,
                source: Box::new(e),
                dump: Box::new(before),
            });
        }

        let y_plus_prev = y_plus;
        y_plus = y_plus.min(y);
        match incumbent.as_mut() {
            Some(inc) => inc.observe(&x, y),
            None => {
                incumbent = Some(Incumbent {
                    y_plus: y,
                    x_plus: x.clone(),
                })
            }
        }
        let r_inst = config.regret.instant(f_star, f_x, y_plus_prev, y_plus);
        r_cum += r_inst;
        info += 0.5 * ln_1p(inv_var * sd * sd);

        records.push(TraceRecord {
            t,
            x,
            y,
            y_plus,
            mu_prev: sign * mu_model,
            sigma_prev: sd,
            beta_sqrt,
            acq_value,
            r_inst,
            r_cum,
            info_gain_cum: info,
            grid_size,
            flags,
            f_x,
            orientation,
        });
        if t < config.horizon && stopping(&config.stopping, &records, config.init) {
            if let Some(last) = records.last_mut() {
                last.flags.push(RecordFlag::Stopped);
            }
            stopped_early = true;
            break;
        }
    }

    Ok(Trace {
        records,
        kind: config.acq.kind,
        orientation,
        regret: config.regret,
        f_star,
        horizon: config.horizon,
        init: config.init,
        stopped_early,
    })
}
