//! Synthetic objectives: RKHS-ball members with certified norm, GP prior
//! draws on a lattice, and a few scaled benchmarks.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::domain::{pattern_search, BoxDomain};
use crate::error::{Error, Result};
use crate::kernels::KernelSpec;
use crate::linalg::{dot, PackedLower};
use crate::math::{cos, floor, powf, sin, sqrt};
use crate::rng::{self, Stream};
use crate::gp::JITTER_LADDER;

/// Safety factor applied to finite-difference Lipschitz estimates.
pub const LIPSCHITZ_SAFETY: f64 = 1.25;

/// Retries when a random RKHS draw has numerically zero norm.
pub const RKHS_RETRIES: usize = 16;

const DENSE_BUDGET: usize = 40_000;
const GRADIENT_BUDGET: usize = 10_000;

/// Known or numerically located extremes of an objective.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Optimum {
    pub f_star: f64,
    pub x_star: Vec<Vec<f64>>,
    /// Largest value on the box, for `max |f|` style constants.
    pub f_max: f64,
}

impl Optimum {
    pub fn abs_max(&self) -> f64 {
        self.f_star.abs().max(self.f_max.abs())
    }
}

/// A deterministic function on a box, minimized by convention.
pub trait Objective {
    fn eval(&self, x: &[f64]) -> f64;
    fn domain(&self) -> BoxDomain;
    fn optimum(&self) -> &Optimum;
}

/// `f(x) = Σ a_i k(c_i, x)` with `‖f‖_H = √(aᵀKa)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RkhsFunction {
    pub kernel: KernelSpec,
    pub d: usize,
    pub r: f64,
    pub centers: Vec<Vec<f64>>,
    pub coeffs: Vec<f64>,
    pub norm: f64,
    /// Finite-difference estimate times the safety factor.
    pub lipschitz_est: f64,
    pub optimum: Optimum,
}

impl RkhsFunction {
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.centers
            .iter()
            .zip(&self.coeffs)
            .map(|(c, a)| a * self.kernel.cov(c, x))
            .sum()
    }

    /// Recomputes `√(aᵀKa)`.
    pub fn rkhs_norm(&self) -> f64 {
        let m = self.centers.len();
        let k = self.kernel.gram(&self.centers).unwrap_or_default();
        let mut q = 0.0;
        for i in 0..m {
            q += self.coeffs[i] * dot(&k[i * m..(i + 1) * m], &self.coeffs);
        }
        sqrt(q.max(0.0))
    }
}

/// Random element of the RKHS with norm exactly `b`.
pub fn make_rkhs(kernel: KernelSpec, d: usize, r: f64, m: usize, b: f64, seed: u64) -> Result<RkhsFunction> {
    kernel.validate()?;
    if m == 0 {
        return Err(Error::config("objective.m", "need at least one center"));
    }
    if !(b >= 1.0) || !b.is_finite() {
        return Err(Error::config("schedule.B", format!("norm bound must be ≥ 1, got {b}")));
    }
    let domain = BoxDomain::new(d, r, 1.0)?;
    let mut rng = rng::stream(seed, Stream::Objective);
    for _ in 0..RKHS_RETRIES {
        let centers: Vec<Vec<f64>> = (0..m).map(|_| domain.sample_uniform(&mut rng)).collect();
        let mut coeffs: Vec<f64> = (0..m).map(|_| rng::normal(&mut rng)).collect();
        if m == 1 {
            coeffs[0] = coeffs[0].abs();
        }
        let k = kernel.gram(&centers)?;
        let mut q = 0.0;
        for i in 0..m {
            q += coeffs[i] * dot(&k[i * m..(i + 1) * m], &coeffs);
        }
        if !(q > 1e-24) || !q.is_finite() {
            continue;
        }
        let scale = b / sqrt(q);
        for a in &mut coeffs {
            *a *= scale;
        }
        let mut f = RkhsFunction {
            kernel,
            d,
            r,
            centers,
            coeffs,
            norm: b,
            lipschitz_est: 0.0,
            optimum: Optimum {
                f_star: 0.0,
                x_star: Vec::new(),
                f_max: 0.0,
            },
        };
        f.lipschitz_est = estimate_lipschitz(|x| f.eval(x), d, r);
        f.optimum = locate_optimum(|x| f.eval(x), d, r)?;
        return Ok(f);
    }
    Err(Error::Numeric(format!(
        "RKHS draw had non-positive norm after {RKHS_RETRIES} attempts"
    )))
}

fn dense_axis(d: usize, budget: usize) -> usize {
    let n = floor(powf(budget as f64, 1.0 / d as f64) + 1e-9) as usize;
    n.max(2)
}

fn lattice_point(index: usize, n: usize, d: usize, r: f64) -> Vec<f64> {
    let mut x = vec![0.0; d];
    let mut rem = index;
    for i in (0..d).rev() {
        let k = rem % n;
        x[i] = if k + 1 == n { r } else { r * k as f64 / (n - 1) as f64 };
        rem /= n;
    }
    x
}

/// Largest central-difference gradient norm on a dense lattice, inflated
/// by the safety factor.
pub fn estimate_lipschitz(f: impl Fn(&[f64]) -> f64, d: usize, r: f64) -> f64 {
    let n = dense_axis(d, GRADIENT_BUDGET);
    let h = 1e-6 * r;
    let total = powf(n as f64, d as f64) as usize;
    let mut best: f64 = 0.0;
    for idx in 0..total {
        let x = lattice_point(idx, n, d, r);
        let mut g2 = 0.0;
        let mut y = x.clone();
        for i in 0..d {
            let lo = (x[i] - h).max(0.0);
            let hi = (x[i] + h).min(r);
            y[i] = hi;
            let fh = f(&y);
            y[i] = lo;
            let fl = f(&y);
            y[i] = x[i];
            let g = (fh - fl) / (hi - lo);
            g2 += g * g;
        }
        best = best.max(sqrt(g2));
    }
    LIPSCHITZ_SAFETY * best
}

/// Dense lattice scan followed by pattern-search polishing of the best
/// few lattice minima.
pub fn locate_optimum(f: impl Fn(&[f64]) -> f64, d: usize, r: f64) -> Result<Optimum> {
    let domain = BoxDomain::new(d, r, 1.0)?;
    let n = dense_axis(d, DENSE_BUDGET);
    let total = powf(n as f64, d as f64) as usize;
    let mut vals = Vec::with_capacity(total);
    let mut f_max = f64::NEG_INFINITY;
    for idx in 0..total {
        let v = f(&lattice_point(idx, n, d, r));
        if v.is_nan() {
            return Err(Error::ObjectiveNan { x: lattice_point(idx, n, d, r) });
        }
        f_max = f_max.max(v);
        vals.push((v, idx));
    }
    vals.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let spacing = r / (n - 1) as f64;
    let mut neg = |x: &[f64]| Ok(-f(x));
    let mut best: Option<(Vec<f64>, f64)> = None;
    for &(_, idx) in vals.iter().take(5) {
        let (x, v) = pattern_search(&mut neg, &domain, lattice_point(idx, n, d, r), spacing, 60)?;
        if best.as_ref().map_or(true, |(_, b)| v > *b) {
            best = Some((x, v));
        }
    }
    let (x, v) = best.expect("lattice is non-empty");
    let mut negmax = |x: &[f64]| Ok(f(x));
    let top = vals.last().map(|&(_, i)| i).unwrap_or(0);
    let (_, vmax) = pattern_search(&mut negmax, &domain, lattice_point(top, n, d, r), spacing, 60)?;
    Ok(Optimum {
        f_star: -v,
        x_star: vec![x],
        f_max: f_max.max(vmax),
    })
}

/// GP prior sample on a lattice, extended off-lattice by multilinear
/// interpolation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpPriorFunction {
    pub kernel: KernelSpec,
    pub d: usize,
    pub r: f64,
    pub axis_points: usize,
    /// Values at lattice points, first axis most significant.
    pub values: Vec<f64>,
    pub lipschitz_est: f64,
    pub optimum: Optimum,
}

impl GpPriorFunction {
    pub fn lattice_len(&self) -> usize {
        self.values.len()
    }

    pub fn lattice_point(&self, index: usize) -> Vec<f64> {
        lattice_point(index, self.axis_points, self.d, self.r)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let n = self.axis_points;
        let h = self.r / (n - 1) as f64;
        let mut base = vec![0usize; self.d];
        let mut frac = vec![0.0; self.d];
        for i in 0..self.d {
            let q = (x[i].clamp(0.0, self.r) / h).min((n - 1) as f64);
            let k = (floor(q) as usize).min(n - 2);
            base[i] = k;
            frac[i] = q - k as f64;
        }
        let mut acc = 0.0;
        for corner in 0..(1usize << self.d) {
            let mut w = 1.0;
            let mut idx = 0;
            for i in 0..self.d {
                let bit = (corner >> (self.d - 1 - i)) & 1;
                w *= if bit == 1 { frac[i] } else { 1.0 - frac[i] };
                idx = idx * n + base[i] + bit;
            }
            if w != 0.0 {
                acc += w * self.values[idx];
            }
        }
        acc
    }
}

/// Joint draw from `GP(0, k)` on an `n^d` lattice.
pub fn make_gp_prior(kernel: KernelSpec, d: usize, r: f64, axis_points: usize, seed: u64) -> Result<GpPriorFunction> {
    kernel.validate()?;
    BoxDomain::new(d, r, 1.0)?;
    if axis_points < 2 {
        return Err(Error::config("objective.lattice", "need at least 2 points per axis"));
    }
    let total = powf(axis_points as f64, d as f64) as usize;
    let pts: Vec<Vec<f64>> = (0..total).map(|i| lattice_point(i, axis_points, d, r)).collect();
    let gram = kernel.gram(&pts)?;
    let mut factor = None;
    for jitter in JITTER_LADDER {
        if let Ok(l) = PackedLower::factor(&gram, total, jitter) {
            factor = Some(l);
            break;
        }
    }
    let factor = factor.ok_or(Error::SingularModel {
        pivot: 0,
        jitter: JITTER_LADDER[JITTER_LADDER.len() - 1],
    })?;
    let mut rng = rng::stream(seed, Stream::Objective);
    let z: Vec<f64> = (0..total).map(|_| rng::normal(&mut rng)).collect();
    let values = factor.mul_vec(&z);

    let h = r / (axis_points - 1) as f64;
    let mut slope: f64 = 0.0;
    for idx in 0..total {
        let mut stride = 1;
        for _ in 0..d {
            let k = (idx / stride) % axis_points;
            if k + 1 < axis_points {
                slope = slope.max((values[idx + stride] - values[idx]).abs() / h);
            }
            stride *= axis_points;
        }
    }
    let (mut imin, mut imax) = (0, 0);
    for (i, &v) in values.iter().enumerate() {
        if v < values[imin] {
            imin = i;
        }
        if v > values[imax] {
            imax = i;
        }
    }
    Ok(GpPriorFunction {
        kernel,
        d,
        r,
        axis_points,
        optimum: Optimum {
            f_star: values[imin],
            x_star: vec![lattice_point(imin, axis_points, d, r)],
            f_max: values[imax],
        },
        values,
        lipschitz_est: LIPSCHITZ_SAFETY * sqrt(d as f64) * slope.max(f64::MIN_POSITIVE),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BenchmarkName {
    BraninScaled,
    QuadraticBowl,
    Sinusoid1d,
}

impl BenchmarkName {
    pub const ALL: [BenchmarkName; 3] = [
        BenchmarkName::BraninScaled,
        BenchmarkName::QuadraticBowl,
        BenchmarkName::Sinusoid1d,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BenchmarkName::BraninScaled => "branin_scaled",
            BenchmarkName::QuadraticBowl => "quadratic_bowl",
            BenchmarkName::Sinusoid1d => "sinusoid_1d",
        }
    }
}

impl fmt::Display for BenchmarkName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BenchmarkName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        BenchmarkName::ALL
            .into_iter()
            .find(|b| b.name() == s)
            .ok_or_else(|| {
                Error::config(
                    "objective.name",
                    format!("unknown benchmark `{s}` (expected branin_scaled, quadratic_bowl or sinusoid_1d)"),
                )
            })
    }
}

/// Branin minimum value.
pub const BRANIN_MIN: f64 = 0.397_887_357_729_738;
/// Bound on the Branin gradient norm over the unit square, after mapping
/// the unit square onto `[-5, 10] × [0, 15]`.
pub const BRANIN_UNIT_LIPSCHITZ: f64 = 1705.0;

fn branin(x1: f64, x2: f64) -> f64 {
    let b = 5.1 / (4.0 * PI * PI);
    let c = 5.0 / PI;
    let t = 1.0 / (8.0 * PI);
    let q = x2 - b * x1 * x1 + c * x1 - 6.0;
    q * q + 10.0 * (1.0 - t) * cos(x1) + 10.0
}

/// Standard test function rescaled to `[0, r]^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Benchmark {
    pub name: BenchmarkName,
    pub d: usize,
    pub r: f64,
    pub lipschitz: f64,
    pub optimum: Optimum,
}

impl Benchmark {
    pub fn new(name: BenchmarkName, d: usize, r: f64) -> Result<Self> {
        BoxDomain::new(d, r, 1.0)?;
        let (lipschitz, optimum) = match name {
            BenchmarkName::BraninScaled => {
                if d != 2 {
                    return Err(Error::config("domain.d", "branin_scaled is two-dimensional"));
                }
                let unit = [
                    [(5.0 - PI) / 15.0, 12.275 / 15.0],
                    [(5.0 + PI) / 15.0, 2.275 / 15.0],
                    [(5.0 + 9.424_78) / 15.0, 2.475 / 15.0],
                ];
                (
                    BRANIN_UNIT_LIPSCHITZ / r,
                    Optimum {
                        f_star: BRANIN_MIN,
                        x_star: unit.iter().map(|p| vec![p[0] * r, p[1] * r]).collect(),
                        f_max: branin(-5.0, 0.0),
                    },
                )
            }
            BenchmarkName::QuadraticBowl => (
                sqrt(d as f64) / r,
                Optimum {
                    f_star: 0.0,
                    x_star: vec![vec![0.5 * r; d]],
                    f_max: 0.25 * d as f64,
                },
            ),
            BenchmarkName::Sinusoid1d => {
                if d != 1 {
                    return Err(Error::config("domain.d", "sinusoid_1d is one-dimensional"));
                }
                (
                    3.0 * PI / r,
                    Optimum {
                        f_star: -1.0,
                        x_star: vec![vec![0.5 * r]],
                        f_max: 1.0,
                    },
                )
            }
        };
        Ok(Benchmark {
            name,
            d,
            r,
            lipschitz,
            optimum,
        })
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self.name {
            BenchmarkName::BraninScaled => branin(15.0 * x[0] / self.r - 5.0, 15.0 * x[1] / self.r),
            BenchmarkName::QuadraticBowl => x.iter().map(|v| (v / self.r - 0.5) * (v / self.r - 0.5)).sum(),
            BenchmarkName::Sinusoid1d => sin(3.0 * PI * x[0] / self.r),
        }
    }
}

/// Any objective the harness can build and serialize.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ObjectiveSpec {
    Rkhs(RkhsFunction),
    Gp(GpPriorFunction),
    Benchmark(Benchmark),
}

impl ObjectiveSpec {
    /// Lipschitz constant: analytic for benchmarks, estimated otherwise.
    pub fn lipschitz(&self) -> f64 {
        match self {
            ObjectiveSpec::Rkhs(f) => f.lipschitz_est,
            ObjectiveSpec::Gp(f) => f.lipschitz_est,
            ObjectiveSpec::Benchmark(f) => f.lipschitz,
        }
    }

    /// Certified RKHS norm, when known.
    pub fn rkhs_norm(&self) -> Option<f64> {
        match self {
            ObjectiveSpec::Rkhs(f) => Some(f.norm),
            _ => None,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            ObjectiveSpec::Rkhs(_) => "rkhs",
            ObjectiveSpec::Gp(_) => "gp",
            ObjectiveSpec::Benchmark(_) => "benchmark",
        }
    }
}

impl Objective for ObjectiveSpec {
    fn eval(&self, x: &[f64]) -> f64 {
        match self {
            ObjectiveSpec::Rkhs(f) => f.eval(x),
            ObjectiveSpec::Gp(f) => f.eval(x),
            ObjectiveSpec::Benchmark(f) => f.eval(x),
        }
    }

    fn domain(&self) -> BoxDomain {
        let (d, r) = match self {
            ObjectiveSpec::Rkhs(f) => (f.d, f.r),
            ObjectiveSpec::Gp(f) => (f.d, f.r),
            ObjectiveSpec::Benchmark(f) => (f.d, f.r),
        };
        BoxDomain {
            d,
            r,
            lipschitz: self.lipschitz(),
        }
    }

    fn optimum(&self) -> &Optimum {
        match self {
            ObjectiveSpec::Rkhs(f) => &f.optimum,
            ObjectiveSpec::Gp(f) => &f.optimum,
            ObjectiveSpec::Benchmark(f) => &f.optimum,
        }
    }
}

/// Closure-backed objective with caller-supplied extremes.
pub struct FnObjective<F> {
    pub f: F,
    pub domain: BoxDomain,
    pub optimum: Optimum,
}

impl<F: Fn(&[f64]) -> f64> Objective for FnObjective<F> {
    fn eval(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
    fn domain(&self) -> BoxDomain {
        self.domain
    }
    fn optimum(&self) -> &Optimum {
        &self.optimum
    }
}

/// `f⁺ = max(f, 0)`.
pub fn clip_positive<F: Fn(&[f64]) -> f64>(f: F) -> impl Fn(&[f64]) -> f64 {
    move |x| f(x).max(0.0)
}
