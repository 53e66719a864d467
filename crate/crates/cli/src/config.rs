//! Flat `key = value` experiment files.
//!
//! One setting per line, `#` starts a comment, keys are dotted
//! (`kernel.family = se`). Unknown or repeated keys are rejected. List
//! values are comma separated; seed lists also accept inclusive ranges
//! such as `1..100`.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use bo_core::domain::{OptimizerSettings, DEFAULT_GRID_CAP};
use bo_core::objectives::BenchmarkName;
use bo_core::schedules::{ScheduleVariant, VeiLogFactor};
use bo_core::{
    AcquisitionKind, AcquisitionSpec, BoxDomain, KernelFamily, KernelSpec, RegretDefinition, RunConfig,
    ScheduleParams, StoppingRule, ThetaMode,
};

use crate::error::{HarnessError, Result};

/// Every key the parser accepts.
pub const KEYS: &[&str] = &[
    "kernel.family",
    "kernel.lengthscale",
    "domain.d",
    "domain.r",
    "lipschitz",
    "grid.cap",
    "opt.restarts",
    "opt.local_steps",
    "schedule.variant",
    "schedule.B",
    "schedule.delta",
    "schedule.sigma",
    "schedule.sigma_eps",
    "schedule.vei_log_factor",
    "acq.kind",
    "acq.alpha",
    "acq.theta",
    "acq.theta_mode",
    "acq.strict",
    "ts.joint_cap",
    "run.T",
    "run.T0",
    "run.seed",
    "run.stopping",
    "run.stop_tol",
    "run.stop_k",
    "regret.definition",
    "objective.kind",
    "objective.name",
    "objective.m",
    "objective.seed",
    "objective.lattice",
    "objective.file",
    "gamma.grid",
    "bounds.probe_budget",
    "sweep.algorithms",
    "sweep.seeds",
    "sweep.deltas",
    "sweep.T",
    "out.dir",
];

const REQUIRED: &[&str] = &["kernel.family", "domain.d", "domain.r", "acq.kind", "run.T", "run.seed"];

/// Where the objective comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum ObjectiveSource {
    /// Random RKHS element with norm `schedule.B`.
    Rkhs { centers: usize, seed: Option<u64> },
    /// Sample path of the GP prior on a lattice.
    Gp { axis_points: usize, seed: Option<u64> },
    Benchmark { name: BenchmarkName },
    /// Serialized objective written by `gen-objective`.
    File { path: PathBuf },
}

/// Sweep axes; `None` means the single base value.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepAxes {
    pub algorithms: Option<Vec<AcquisitionKind>>,
    pub seeds: Option<Vec<u64>>,
    pub deltas: Option<Vec<f64>>,
    pub horizons: Option<Vec<usize>>,
}

impl SweepAxes {
    pub fn is_empty(&self) -> bool {
        self.algorithms.is_none() && self.seeds.is_none() && self.deltas.is_none() && self.horizons.is_none()
    }
}

/// A fully validated experiment with defaults filled in.
#[derive(Debug, Clone, PartialEq)]
pub struct Plan {
    pub kernel: KernelSpec,
    pub d: usize,
    pub r: f64,
    /// Overrides the objective's own Lipschitz constant.
    pub lipschitz: Option<f64>,
    pub grid_cap: usize,
    pub optimizer: OptimizerSettings,
    pub variant: ScheduleVariant,
    pub b: f64,
    pub delta: f64,
    pub sigma: f64,
    pub sigma_eps: f64,
    pub vei_log_factor: VeiLogFactor,
    pub acq: AcquisitionSpec,
    pub horizon: usize,
    pub init: usize,
    pub seed: u64,
    pub stopping: StoppingRule,
    /// `None` picks the algorithm's default definition.
    pub regret: Option<RegretDefinition>,
    pub objective: ObjectiveSource,
    pub gamma_grid: usize,
    pub probe_budget: usize,
    pub sweep: SweepAxes,
    pub out_dir: Option<PathBuf>,
}

/// One point of the sweep grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub kind: AcquisitionKind,
    pub seed: u64,
    pub delta: f64,
    pub horizon: usize,
}

struct Raw {
    values: BTreeMap<String, String>,
}

impl Raw {
    fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(HarnessError::Syntax {
                    line: i + 1,
                    message: format!("expected `key = value`, got `{line}`"),
                });
            };
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                return Err(HarnessError::config(key, "unknown key"));
            }
            if value.is_empty() {
                return Err(HarnessError::config(key, "empty value"));
            }
            if values.insert(key.to_string(), value.to_string()).is_some() {
                return Err(HarnessError::config(key, "given more than once"));
            }
        }
        Ok(Raw { values })
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: Display,
    {
        self.values
            .get(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|e| HarnessError::config(key, format!("cannot parse `{v}`: {e}")))
            })
            .transpose()
    }

    fn or<T: FromStr>(&self, key: &str, default: T) -> Result<T>
    where
        T::Err: Display,
    {
        Ok(self.get(key)?.unwrap_or(default))
    }

    fn require<T: FromStr>(&self, key: &str) -> Result<T>
    where
        T::Err: Display,
    {
        self.get(key)?
            .ok_or_else(|| HarnessError::config(key, "required key is missing"))
    }

    fn list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>>
    where
        T::Err: Display,
    {
        let Some(v) = self.values.get(key) else {
            return Ok(None);
        };
        let items = v
            .split(',')
            .map(|s| {
                let s = s.trim();
                s.parse::<T>()
                    .map_err(|e| HarnessError::config(key, format!("cannot parse `{s}`: {e}")))
            })
            .collect::<Result<Vec<T>>>()?;
        Ok(Some(items))
    }

    fn seeds(&self, key: &str) -> Result<Option<Vec<u64>>> {
        let Some(v) = self.values.get(key) else {
            return Ok(None);
        };
        let mut out = Vec::new();
        for part in v.split(',') {
            let part = part.trim();
            if let Some((a, b)) = part.split_once("..") {
                let b = b.strip_prefix('=').unwrap_or(b);
                let parse = |s: &str| {
                    s.trim()
                        .parse::<u64>()
                        .map_err(|e| HarnessError::config(key, format!("cannot parse `{s}`: {e}")))
                };
                let (a, b) = (parse(a)?, parse(b)?);
                if b < a {
                    return Err(HarnessError::config(key, format!("empty range `{part}`")));
                }
                out.extend(a..=b);
            } else {
                out.push(
                    part.parse::<u64>()
                        .map_err(|e| HarnessError::config(key, format!("cannot parse `{part}`: {e}")))?,
                );
            }
        }
        Ok(Some(out))
    }
}

fn non_empty<T>(key: &str, v: &Option<Vec<T>>) -> Result<()> {
    match v {
        Some(items) if items.is_empty() => Err(HarnessError::config(key, "list is empty")),
        _ => Ok(()),
    }
}

impl Plan {
    pub fn from_path(path: &Path, overrides: &[(&str, String)]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        let mut plan = Plan::parse_with(&text, overrides)?;
        if let ObjectiveSource::File { path: f } = &mut plan.objective {
            if f.is_relative() {
                if let Some(dir) = path.parent() {
                    *f = dir.join(&*f);
                }
            }
        }
        Ok(plan)
    }

    pub fn parse(text: &str) -> Result<Self> {
        Plan::parse_with(text, &[])
    }

    /// Parses `text`, then replaces or adds the given keys.
    pub fn parse_with(text: &str, overrides: &[(&str, String)]) -> Result<Self> {
        let mut raw = Raw::parse(text)?;
        for (key, value) in overrides {
            if !KEYS.contains(key) {
                return Err(HarnessError::config(key, "unknown key"));
            }
            raw.values.insert(key.to_string(), value.clone());
        }
        for key in REQUIRED {
            if !raw.values.contains_key(*key) {
                return Err(HarnessError::config(key, "required key is missing"));
            }
        }

        let d: usize = raw.require("domain.d")?;
        let r: f64 = raw.require("domain.r")?;
        let family: KernelFamily = raw.require("kernel.family")?;
        let kernel = KernelSpec {
            family,
            lengthscale: raw.or("kernel.lengthscale", 0.2 * r)?,
        };
        let variant: ScheduleVariant = raw.or("schedule.variant", ScheduleVariant::Compact)?;
        let sigma: f64 = raw.or("schedule.sigma", 0.1)?;
        let acq = AcquisitionSpec {
            kind: raw.require("acq.kind")?,
            alpha: raw.or("acq.alpha", 1.0)?,
            theta: raw.get("acq.theta")?,
            theta_mode: raw.or("acq.theta_mode", ThetaMode::Fixed)?,
            strict: raw.or("acq.strict", false)?,
            variant,
            ts_joint_cap: raw.or("ts.joint_cap", bo_core::acquisition::DEFAULT_TS_JOINT_CAP)?,
        };
        let stopping = match raw.or("run.stopping", String::from("horizon"))?.as_str() {
            "horizon" => StoppingRule::Horizon,
            "stall" => StoppingRule::Stall {
                tol: raw.or("run.stop_tol", 0.0)?,
                k: raw.or("run.stop_k", 5)?,
            },
            "acq_below" => StoppingRule::AcqBelow {
                tol: raw.or("run.stop_tol", 0.0)?,
            },
            other => {
                return Err(HarnessError::config(
                    "run.stopping",
                    format!("unknown rule `{other}` (expected horizon, stall or acq_below)"),
                ))
            }
        };
        let objective = match raw.or("objective.kind", String::from("rkhs"))?.as_str() {
            "rkhs" => ObjectiveSource::Rkhs {
                centers: raw.or("objective.m", 10)?,
                seed: raw.get("objective.seed")?,
            },
            "gp" => ObjectiveSource::Gp {
                axis_points: raw.or("objective.lattice", 20)?,
                seed: raw.get("objective.seed")?,
            },
            "benchmark" => ObjectiveSource::Benchmark {
                name: raw.require("objective.name")?,
            },
            "file" => ObjectiveSource::File {
                path: raw.require::<PathBuf>("objective.file")?,
            },
            other => {
                return Err(HarnessError::config(
                    "objective.kind",
                    format!("unknown kind `{other}` (expected rkhs, gp, benchmark or file)"),
                ))
            }
        };
        let sweep = SweepAxes {
            algorithms: raw.list("sweep.algorithms")?,
            seeds: raw.seeds("sweep.seeds")?,
            deltas: raw.list("sweep.deltas")?,
            horizons: raw.list("sweep.T")?,
        };
        non_empty("sweep.algorithms", &sweep.algorithms)?;
        non_empty("sweep.seeds", &sweep.seeds)?;
        non_empty("sweep.deltas", &sweep.deltas)?;
        non_empty("sweep.T", &sweep.horizons)?;

        let plan = Plan {
            kernel,
            d,
            r,
            lipschitz: raw.get("lipschitz")?,
            grid_cap: raw.or("grid.cap", DEFAULT_GRID_CAP)?,
            optimizer: OptimizerSettings {
                restarts: raw.or("opt.restarts", 16)?,
                local_steps: raw.or("opt.local_steps", 30)?,
            },
            variant,
            b: raw.or("schedule.B", 1.0)?,
            delta: raw.or("schedule.delta", 0.1)?,
            sigma,
            sigma_eps: raw.or("schedule.sigma_eps", sigma)?,
            vei_log_factor: raw.or("schedule.vei_log_factor", VeiLogFactor::One)?,
            acq,
            horizon: raw.require("run.T")?,
            init: raw.or("run.T0", 1)?,
            seed: raw.require("run.seed")?,
            stopping,
            regret: raw.get("regret.definition")?,
            objective,
            gamma_grid: raw.or("gamma.grid", 1024)?,
            probe_budget: raw.or("bounds.probe_budget", 64)?,
            sweep,
            out_dir: raw.get("out.dir")?,
        };
        plan.validate()?;
        Ok(plan)
    }

    /// Checks every cell of the sweep.
    pub fn validate(&self) -> Result<()> {
        if let ObjectiveSource::Rkhs { centers: 0, .. } = self.objective {
            return Err(HarnessError::config("objective.m", "need at least one center"));
        }
        if let ObjectiveSource::Gp { axis_points, .. } = self.objective {
            if axis_points < 2 {
                return Err(HarnessError::config("objective.lattice", "need at least 2 points per axis"));
            }
        }
        if let Some(l) = self.lipschitz {
            if !(l > 0.0) {
                return Err(HarnessError::config("lipschitz", "must be positive"));
            }
        }
        if self.optimizer.restarts == 0 {
            return Err(HarnessError::config("opt.restarts", "must be at least 1"));
        }
        if self.gamma_grid == 0 {
            return Err(HarnessError::config("gamma.grid", "must be at least 1"));
        }
        for cell in self.cells() {
            let plan = self.cell_plan(&cell);
            plan.run_config(plan.lipschitz.unwrap_or(1.0))?.validate()?;
        }
        Ok(())
    }

    /// Schedule constants for a given Lipschitz constant.
    pub fn schedule(&self, lipschitz: f64) -> Result<ScheduleParams> {
        let mut p = ScheduleParams::new(self.b, self.delta, self.sigma, self.sigma_eps, self.d, self.r, lipschitz)?;
        p.vei_log_factor = self.vei_log_factor;
        Ok(p)
    }

    /// Engine configuration for a given Lipschitz constant.
    pub fn run_config(&self, lipschitz: f64) -> Result<RunConfig> {
        let domain = BoxDomain::new(self.d, self.r, lipschitz)?;
        let mut cfg = RunConfig::new(domain, self.kernel, self.acq, self.schedule(lipschitz)?, self.horizon, self.seed);
        cfg.init = self.init;
        cfg.stopping = self.stopping;
        if let Some(def) = self.regret {
            cfg.regret = def;
        }
        cfg.grid_cap = self.grid_cap;
        cfg.optimizer = self.optimizer;
        Ok(cfg)
    }

    /// Cartesian product of the sweep axes: algorithms, seeds, deltas, horizons.
    pub fn cells(&self) -> Vec<Cell> {
        let kinds = self.sweep.algorithms.clone().unwrap_or_else(|| vec![self.acq.kind]);
        let seeds = self.sweep.seeds.clone().unwrap_or_else(|| vec![self.seed]);
        let deltas = self.sweep.deltas.clone().unwrap_or_else(|| vec![self.delta]);
        let horizons = self.sweep.horizons.clone().unwrap_or_else(|| vec![self.horizon]);
        let mut out = Vec::with_capacity(kinds.len() * seeds.len() * deltas.len() * horizons.len());
        for &kind in &kinds {
            for &seed in &seeds {
                for &delta in &deltas {
                    for &horizon in &horizons {
                        out.push(Cell {
                            kind,
                            seed,
                            delta,
                            horizon,
                        });
                    }
                }
            }
        }
        out
    }

    /// Output file stem of a cell, unique within the plan.
    pub fn cell_stem(&self, cell: &Cell) -> String {
        let mut stem = format!("{}_{}_{}", cell.kind, cell.seed, cell.horizon);
        if self.sweep.deltas.as_ref().is_some_and(|d| d.len() > 1) {
            stem.push_str(&format!("_delta{}", cell.delta));
        }
        stem
    }

    /// The single-run plan for one cell.
    pub fn cell_plan(&self, cell: &Cell) -> Plan {
        let mut p = self.clone();
        p.acq.kind = cell.kind;
        p.seed = cell.seed;
        p.delta = cell.delta;
        p.horizon = cell.horizon;
        p.sweep = SweepAxes::default();
        p
    }

    /// Key/value pairs in file order, including every default.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        fn join<T: ToString>(v: &[T]) -> String {
            v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
        }
        let mut e: Vec<(&'static str, String)> = vec![
            ("kernel.family", self.kernel.family.to_string()),
            ("kernel.lengthscale", self.kernel.lengthscale.to_string()),
            ("domain.d", self.d.to_string()),
            ("domain.r", self.r.to_string()),
        ];
        if let Some(l) = self.lipschitz {
            e.push(("lipschitz", l.to_string()));
        }
        e.extend([
            ("grid.cap", self.grid_cap.to_string()),
            ("opt.restarts", self.optimizer.restarts.to_string()),
            ("opt.local_steps", self.optimizer.local_steps.to_string()),
            ("schedule.variant", self.variant.to_string()),
            ("schedule.B", self.b.to_string()),
            ("schedule.delta", self.delta.to_string()),
            ("schedule.sigma", self.sigma.to_string()),
            ("schedule.sigma_eps", self.sigma_eps.to_string()),
            ("schedule.vei_log_factor", self.vei_log_factor.to_string()),
            ("acq.kind", self.acq.kind.to_string()),
            ("acq.alpha", self.acq.alpha.to_string()),
        ]);
        if let Some(t) = self.acq.theta {
            e.push(("acq.theta", t.to_string()));
        }
        e.extend([
            ("acq.theta_mode", self.acq.theta_mode.to_string()),
            ("acq.strict", self.acq.strict.to_string()),
            ("ts.joint_cap", self.acq.ts_joint_cap.to_string()),
            ("run.T", self.horizon.to_string()),
            ("run.T0", self.init.to_string()),
            ("run.seed", self.seed.to_string()),
            ("run.stopping", self.stopping.name().to_string()),
        ]);
        match self.stopping {
            StoppingRule::Horizon => {}
            StoppingRule::Stall { tol, k } => {
                e.push(("run.stop_tol", tol.to_string()));
                e.push(("run.stop_k", k.to_string()));
            }
            StoppingRule::AcqBelow { tol } => e.push(("run.stop_tol", tol.to_string())),
        }
        if let Some(def) = self.regret {
            e.push(("regret.definition", def.to_string()));
        }
        match &self.objective {
            ObjectiveSource::Rkhs { centers, seed } => {
                e.push(("objective.kind", "rkhs".into()));
                e.push(("objective.m", centers.to_string()));
                if let Some(s) = seed {
                    e.push(("objective.seed", s.to_string()));
                }
            }
            ObjectiveSource::Gp { axis_points, seed } => {
                e.push(("objective.kind", "gp".into()));
                e.push(("objective.lattice", axis_points.to_string()));
                if let Some(s) = seed {
                    e.push(("objective.seed", s.to_string()));
                }
            }
            ObjectiveSource::Benchmark { name } => {
                e.push(("objective.kind", "benchmark".into()));
                e.push(("objective.name", name.to_string()));
            }
            ObjectiveSource::File { path } => {
                e.push(("objective.kind", "file".into()));
                e.push(("objective.file", path.display().to_string()));
            }
        }
        e.push(("gamma.grid", self.gamma_grid.to_string()));
        e.push(("bounds.probe_budget", self.probe_budget.to_string()));
        if let Some(v) = &self.sweep.algorithms {
            e.push(("sweep.algorithms", join(v)));
        }
        if let Some(v) = &self.sweep.seeds {
            e.push(("sweep.seeds", compress_seeds(v)));
        }
        if let Some(v) = &self.sweep.deltas {
            e.push(("sweep.deltas", join(v)));
        }
        if let Some(v) = &self.sweep.horizons {
            e.push(("sweep.T", join(v)));
        }
        if let Some(dir) = &self.out_dir {
            e.push(("out.dir", dir.display().to_string()));
        }
        e
    }

    /// Serializes the plan in the format [`Plan::parse`] reads.
    pub fn emit(&self) -> String {
        let mut s = String::new();
        for (k, v) in self.entries() {
            s.push_str(k);
            s.push_str(" = ");
            s.push_str(&v);
            s.push('\n');
        }
        s
    }
}

/// Writes runs of consecutive seeds as `a..b`.
fn compress_seeds(seeds: &[u64]) -> String {
    let mut parts = Vec::new();
    let mut i = 0;
    while i < seeds.len() {
        let mut j = i;
        while j + 1 < seeds.len() && seeds[j] < u64::MAX && seeds[j + 1] == seeds[j] + 1 {
            j += 1;
        }
        if j > i + 1 {
            parts.push(format!("{}..{}", seeds[i], seeds[j]));
            i = j + 1;
        } else {
            parts.push(seeds[i].to_string());
            i += 1;
        }
    }
    parts.join(",")
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "kernel.family=se\ndomain.d=1\ndomain.r=1\nacq.kind=ucb\nrun.T=10\nrun.seed=1\n";

    #[test]
    fn minimal_config_gets_defaults() {
        let p = Plan::parse(MINIMAL).unwrap();
        assert_eq!(p.kernel.lengthscale, 0.2);
        assert_eq!(p.delta, 0.1);
        assert_eq!(p.sigma_eps, p.sigma);
        assert_eq!(p.init, 1);
        assert_eq!(p.cells().len(), 1);
    }

    #[test]
    fn seed_ranges() {
        assert_eq!(compress_seeds(&[1, 2, 3, 5, 7, 8]), "1..3,5,7,8");
        let p = Plan::parse(&format!("{MINIMAL}sweep.seeds = 1..100\nsweep.algorithms = ucb, ts\n")).unwrap();
        assert_eq!(p.cells().len(), 200);
    }

    #[test]
    fn named_errors() {
        let err = Plan::parse(&MINIMAL.replace("ucb", "vei")).unwrap_err();
        assert!(err.to_string().contains("acq.theta"), "{err}");
        let err = Plan::parse(&format!("{MINIMAL}kernel.lenthscale = 2\n")).unwrap_err();
        assert!(err.to_string().contains("kernel.lenthscale"));
        let err = Plan::parse(&MINIMAL.replace("run.T=10", "run.T=ten")).unwrap_err();
        assert!(err.to_string().contains("run.T"));
        let err = Plan::parse(&MINIMAL.replace("run.seed=1\n", "")).unwrap_err();
        assert!(err.to_string().contains("run.seed"));
    }
}
