//! The box `[0, r]^d`, its lattice discretizations, and derivative-free
//! maximization over either.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{ceil, powf, sqrt};
use crate::rng::{self, StreamRng};

/// Default upper bound on lattice size.
pub const DEFAULT_GRID_CAP: usize = 200_000;

/// Slack allowed when checking box membership.
pub const BOX_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxDomain {
    pub d: usize,
    pub r: f64,
    /// Lipschitz constant of the objective in coordinate units.
    pub lipschitz: f64,
}

impl BoxDomain {
    pub fn new(d: usize, r: f64, lipschitz: f64) -> Result<Self> {
        let b = BoxDomain { d, r, lipschitz };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::config("domain.d", "dimension must be at least 1"));
        }
        if !(self.r > 0.0) || !self.r.is_finite() {
            return Err(Error::config("domain.r", format!("edge length must be positive, got {}", self.r)));
        }
        if !(self.lipschitz > 0.0) || !self.lipschitz.is_finite() {
            return Err(Error::config(
                "lipschitz",
                format!("Lipschitz constant must be positive, got {}", self.lipschitz),
            ));
        }
        Ok(())
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.d
            && x
                .iter()
                .all(|&v| v >= -BOX_TOLERANCE && v <= self.r + BOX_TOLERANCE)
    }

    pub fn clamp(&self, x: &mut [f64]) {
        for v in x {
            *v = v.clamp(0.0, self.r);
        }
    }

    pub fn sample_uniform(&self, rng: &mut StreamRng) -> Vec<f64> {
        (0..self.d).map(|_| self.r * rng::uniform(rng)).collect()
    }

    /// Cover radius `h_t = 1 / (L t²)`.
    pub fn cover_radius(&self, t: usize) -> f64 {
        let t = t as f64;
        1.0 / (self.lipschitz * t * t)
    }

    /// The bookkeeping cardinality `(1 + r t² L)^d` used by union-bound
    /// schedules, independent of the lattice actually built.
    pub fn nominal_grid_size(&self, t: usize) -> f64 {
        let t = t as f64;
        powf(1.0 + self.r * t * t * self.lipschitz, self.d as f64)
    }

    pub fn lattice(&self, t: usize, cap: usize) -> Result<Discretization> {
        Discretization::build(self, t, cap)
    }
}

/// Regular product lattice on `[0, r]^d` with the same number of points on
/// every axis. Points are indexed lexicographically, first axis most
/// significant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Discretization {
    pub t: usize,
    pub d: usize,
    pub r: f64,
    /// Target cover radius.
    pub h: f64,
    /// Per-axis spacing actually used.
    pub spacing: f64,
    pub axis_points: usize,
    /// Set when the lattice was coarsened to respect the cap; the cover
    /// radius is then not guaranteed.
    pub capped: bool,
}

fn ipow(base: usize, exp: usize) -> Option<usize> {
    let mut acc: usize = 1;
    for _ in 0..exp {
        acc = acc.checked_mul(base)?;
    }
    Some(acc)
}

impl Discretization {
    pub fn build(domain: &BoxDomain, t: usize, cap: usize) -> Result<Self> {
        domain.validate()?;
        if t == 0 {
            return Err(Error::invalid("discretization index t must be at least 1"));
        }
        let d = domain.d;
        match ipow(2, d) {
            Some(min) if cap >= min => {}
            _ => {
                return Err(Error::config(
                    "grid.cap",
                    format!("cap {cap} is below the 2^{d} corner points"),
                ))
            }
        }
        let h = domain.cover_radius(t);
        let target = (2.0 * h / sqrt(d as f64)).min(domain.r);
        let ratio = domain.r / target;
        let intervals = ceil(ratio - 1e-9 * ratio).max(1.0);
        let mut n = if intervals > 1e9 { usize::MAX } else { intervals as usize + 1 };
        let mut capped = false;
        if ipow(n, d).map_or(true, |s| s > cap) {
            capped = true;
            n = (powf(cap as f64, 1.0 / d as f64) + 1e-9) as usize;
            while ipow(n, d).map_or(true, |s| s > cap) {
                n -= 1;
            }
            while ipow(n + 1, d).is_some_and(|s| s <= cap) {
                n += 1;
            }
            n = n.max(2);
        }
        Ok(Discretization {
            t,
            d,
            r: domain.r,
            h,
            spacing: domain.r / (n - 1) as f64,
            axis_points: n,
            capped,
        })
    }

    pub fn len(&self) -> usize {
        ipow(self.axis_points, self.d).unwrap_or(usize::MAX)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn coord(&self, k: usize) -> f64 {
        if k + 1 == self.axis_points {
            self.r
        } else {
            k as f64 * self.spacing
        }
    }

    pub fn point(&self, index: usize) -> Vec<f64> {
        let mut x = vec![0.0; self.d];
        let mut rem = index;
        for i in (0..self.d).rev() {
            x[i] = self.coord(rem % self.axis_points);
            rem /= self.axis_points;
        }
        x
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }

    /// Index and location of the nearest lattice point in 2-norm. Ties go
    /// to the lexicographically smallest index.
    pub fn closest(&self, x: &[f64]) -> Result<(usize, Vec<f64>)> {
        if x.len() != self.d {
            return Err(Error::invalid(format!(
                "point has dimension {}, lattice has {}",
                x.len(),
                self.d
            )));
        }
        if x
            .iter()
            .any(|&v| !(v >= -BOX_TOLERANCE && v <= self.r + BOX_TOLERANCE))
        {
            return Err(Error::invalid(format!("point {x:?} lies outside [0, {}]^{}", self.r, self.d)));
        }
        let mut index = 0;
        let mut out = vec![0.0; self.d];
        for (i, &v) in x.iter().enumerate() {
            let q = v.clamp(0.0, self.r) / self.spacing;
            let k = (ceil(q - 0.5).max(0.0) as usize).min(self.axis_points - 1);
            index = index * self.axis_points + k;
            out[i] = self.coord(k);
        }
        Ok((index, out))
    }

    /// Worst-case distance from a box point to the lattice.
    pub fn achieved_cover(&self) -> f64 {
        0.5 * self.spacing * sqrt(self.d as f64)
    }
}

/// Settings for the multistart pattern search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerSettings {
    pub restarts: usize,
    pub local_steps: usize,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        OptimizerSettings {
            restarts: 16,
            local_steps: 30,
        }
    }
}

fn checked(x: &[f64], v: f64) -> Result<f64> {
    if v.is_nan() {
        Err(Error::AcquisitionNan { x: x.to_vec() })
    } else {
        Ok(v)
    }
}

/// Maximizes `acq` over the box: random starts, each refined by coordinate
/// pattern search whose step halves after a sweep without improvement.
/// Only strict improvements are accepted, so a flat surface returns the
/// first random start.
pub fn maximize_acquisition<F>(
    mut acq: F,
    domain: &BoxDomain,
    settings: OptimizerSettings,
    seed: u64,
) -> Result<(Vec<f64>, f64)>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    let mut rng = rng::from_seed(seed);
    let mut best: Option<(Vec<f64>, f64)> = None;
    for _ in 0..settings.restarts.max(1) {
        let x = domain.sample_uniform(&mut rng);
        let (x, fx) = pattern_search(&mut acq, domain, x, 0.25 * domain.r, settings.local_steps)?;
        if best.as_ref().map_or(true, |(_, b)| fx > *b) {
            best = Some((x, fx));
        }
    }
    Ok(best.expect("at least one restart"))
}

/// Coordinate pattern search from `x`, maximizing. Each sweep tries
/// `±step` along every axis and takes the first strict improvement; a sweep
/// with no improvement halves the step.
pub fn pattern_search<F>(acq: &mut F, domain: &BoxDomain, mut x: Vec<f64>, step: f64, sweeps: usize) -> Result<(Vec<f64>, f64)>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    let mut fx = checked(&x, acq(&x)?)?;
    let mut step = step;
    for _ in 0..sweeps {
        let mut moved = false;
        for i in 0..domain.d {
            for dir in [1.0, -1.0] {
                let old = x[i];
                let cand = (old + dir * step).clamp(0.0, domain.r);
                if cand == old {
                    continue;
                }
                x[i] = cand;
                let fc = checked(&x, acq(&x)?)?;
                if fc > fx {
                    fx = fc;
                    moved = true;
                    break;
                }
                x[i] = old;
            }
        }
        if !moved {
            step *= 0.5;
        }
    }
    Ok((x, fx))
}

/// Exhaustive argmax over a finite list of values; ties go to the smallest
/// index.
pub fn argmax_index(values: &[f64]) -> Result<usize> {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v.is_nan() {
            return Err(Error::Numeric(format!("NaN score at candidate {i}")));
        }
        if v > values[best] {
            best = i;
        }
    }
    if values.is_empty() {
        return Err(Error::invalid("argmax over an empty set"));
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(d: usize) -> BoxDomain {
        BoxDomain::new(d, 1.0, 1.0).unwrap()
    }

    #[test]
    fn lattice_examples() {
        let g = unit(1).lattice(1, DEFAULT_GRID_CAP).unwrap();
        assert_eq!(g.points(), vec![vec![0.0], vec![1.0]]);
        let g = unit(1).lattice(2, DEFAULT_GRID_CAP).unwrap();
        assert_eq!(g.points(), vec![vec![0.0], vec![0.5], vec![1.0]]);
        let g = unit(2).lattice(1, DEFAULT_GRID_CAP).unwrap();
        assert_eq!(g.len(), 4);
        assert!(g.achieved_cover() <= g.h);
    }

    #[test]
    fn closest_examples() {
        let g = unit(1).lattice(2, DEFAULT_GRID_CAP).unwrap();
        assert_eq!(g.closest(&[0.26]).unwrap(), (1, vec![0.5]));
        assert_eq!(g.closest(&[0.25]).unwrap(), (0, vec![0.0]));
        assert_eq!(g.closest(&[1.0]).unwrap(), (2, vec![1.0]));
        assert!(g.closest(&[1.0 + 1e-9]).is_err());
        assert!(g.closest(&[1.0 + 1e-13]).is_ok());
    }

    #[test]
    fn cap_rules() {
        assert!(matches!(unit(3).lattice(1, 7), Err(Error::Config { .. })));
        let g = unit(2).lattice(50, 100).unwrap();
        assert!(g.capped);
        assert_eq!(g.len(), 100);
    }

    #[test]
    fn constant_acquisition_returns_first_start() {
        let dom = unit(2);
        let (x, _) = maximize_acquisition(|_| Ok(1.0), &dom, OptimizerSettings { restarts: 5, local_steps: 3 }, 9).unwrap();
        let mut r = rng::from_seed(9);
        assert_eq!(x, dom.sample_uniform(&mut r));
    }

    #[test]
    fn nan_is_reported() {
        let dom = unit(1);
        let e = maximize_acquisition(|_| Ok(f64::NAN), &dom, OptimizerSettings::default(), 1).unwrap_err();
        assert!(matches!(e, Error::AcquisitionNan { .. }));
    }

    #[test]
    fn argmax_ties() {
        assert_eq!(argmax_index(&[1.0, 3.0, 3.0]).unwrap(), 1);
    }
}
