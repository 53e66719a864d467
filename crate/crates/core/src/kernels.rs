//! Stationary isotropic covariance functions normalized to `k(x, x) = 1`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{dist2, exp, sqrt};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelFamily {
    #[serde(rename = "se")]
    SquaredExponential,
    Matern12,
    Matern32,
    Matern52,
}

impl KernelFamily {
    pub const ALL: [KernelFamily; 4] = [
        KernelFamily::SquaredExponential,
        KernelFamily::Matern12,
        KernelFamily::Matern32,
        KernelFamily::Matern52,
    ];

    pub fn name(self) -> &'static str {
        match self {
            KernelFamily::SquaredExponential => "se",
            KernelFamily::Matern12 => "matern12",
            KernelFamily::Matern32 => "matern32",
            KernelFamily::Matern52 => "matern52",
        }
    }
}

impl fmt::Display for KernelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for KernelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        KernelFamily::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                Error::config(
                    "kernel.family",
                    format!("unknown kernel `{s}` (expected se, matern12, matern32 or matern52)"),
                )
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub family: KernelFamily,
    pub lengthscale: f64,
}

impl KernelSpec {
    pub fn new(family: KernelFamily, lengthscale: f64) -> Result<Self> {
        let spec = KernelSpec {
            family,
            lengthscale,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lengthscale > 0.0) || !self.lengthscale.is_finite() {
            return Err(Error::config(
                "kernel.lengthscale",
                format!("must be a positive finite number, got {}", self.lengthscale),
            ));
        }
        Ok(())
    }

    /// Covariance as a function of Euclidean distance.
    #[inline]
    pub fn of_distance(&self, r: f64) -> f64 {
        let u = r / self.lengthscale;
        match self.family {
            KernelFamily::SquaredExponential => exp(-0.5 * u * u),
            KernelFamily::Matern12 => exp(-u),
            KernelFamily::Matern32 => {
                let s = sqrt(3.0) * u;
                (1.0 + s) * exp(-s)
            }
            KernelFamily::Matern52 => {
                let s = sqrt(5.0) * u;
                (1.0 + s + s * s / 3.0) * exp(-s)
            }
        }
    }

    /// Unchecked evaluation; callers guarantee equal dimensions.
    #[inline]
    pub fn cov(&self, x: &[f64], y: &[f64]) -> f64 {
        if self.family == KernelFamily::SquaredExponential {
            let l2 = self.lengthscale * self.lengthscale;
            return exp(-0.5 * dist2(x, y) / l2);
        }
        self.of_distance(sqrt(dist2(x, y)))
    }

    pub fn evaluate(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.validate()?;
        if x.len() != y.len() || x.is_empty() {
            return Err(Error::invalid(format!(
                "kernel arguments have dimensions {} and {}",
                x.len(),
                y.len()
            )));
        }
        Ok(self.cov(x, y))
    }

    /// Row-major Gram matrix. Each unordered pair is evaluated once, so the
    /// result is exactly symmetric.
    pub fn gram(&self, points: &[Vec<f64>]) -> Result<Vec<f64>> {
        self.validate()?;
        let n = points.len();
        if n == 0 {
            return Err(Error::invalid("gram matrix of an empty point set"));
        }
        let d = points[0].len();
        if d == 0 || points.iter().any(|p| p.len() != d) {
            return Err(Error::invalid("gram points must share a positive dimension"));
        }
        let mut k = vec![0.0; n * n];
        for i in 0..n {
            k[i * n + i] = 1.0;
            for j in 0..i {
                let v = self.cov(&points[i], &points[j]);
                k[i * n + j] = v;
                k[j * n + i] = v;
            }
        }
        Ok(k)
    }

    /// Cross-covariance vector `[k(p, x) for p in points]`.
    pub fn cross(&self, points: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
        points.iter().map(|p| self.cov(p, x)).collect()
    }
}
