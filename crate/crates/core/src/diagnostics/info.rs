use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::domain::BoxDomain;
use crate::engine::TraceRecord;
use crate::error::{Error, Result};
use crate::kernels::KernelSpec;
use crate::math::{ln_1p, powf, sqrt};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfoGain {
    pub total: f64,
    /// `½ ln(1 + σ⁻² σ²_{t−1}(x_t))` per record.
    pub terms: Vec<f64>,
}

/// Information gain accrued along a trace.
pub fn info_gain(records: &[TraceRecord], sigma: f64) -> Result<InfoGain> {
    if !(sigma > 0.0) {
        return Err(Error::Unsupported("information gain diverges for σ = 0".into()));
    }
    let inv = 1.0 / (sigma * sigma);
    let terms: Vec<f64> = records
        .iter()
        .map(|r| 0.5 * ln_1p(inv * r.sigma_prev * r.sigma_prev))
        .collect();
    Ok(InfoGain {
        total: terms.iter().sum(),
        terms,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceSumCheck {
    pub variance_sum: f64,
    /// `(C_γ / 4) · 2 · info_gain`.
    pub bound: f64,
    /// Records where `s ≤ ln(1 + σ⁻² s) / ln(1 + σ⁻²)` fails.
    pub violations: Vec<usize>,
}

impl VarianceSumCheck {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Per-term check of the variance-sum inequality.
pub fn variance_sum_check(records: &[TraceRecord], sigma: f64) -> Result<VarianceSumCheck> {
    let gain = info_gain(records, sigma)?;
    let inv = 1.0 / (sigma * sigma);
    let denom = ln_1p(inv);
    let mut violations = Vec::new();
    let mut sum = 0.0;
    for r in records {
        let s = r.sigma_prev * r.sigma_prev;
        sum += s;
        if s > ln_1p(inv * s) / denom {
            violations.push(r.t);
        }
    }
    let c_gamma = 8.0 / denom;
    Ok(VarianceSumCheck {
        variance_sum: sum,
        bound: 0.25 * c_gamma * 2.0 * gain.total,
        violations,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaEstimate {
    /// `γ̂_T`.
    pub gamma: f64,
    /// `γ̂_t` for `t = 1..=T`.
    pub series: Vec<f64>,
    pub grid_size: usize,
    /// Grid indices picked, in order.
    pub picks: Vec<usize>,
}

/// Greedy estimate of the maximum information gain: repeatedly sample the
/// lattice point with the largest posterior variance. Returns the sum of
/// the `½ ln(1 + σ⁻² σ²)` terms, a lower estimate of the true maximum.
pub fn gamma_greedy(kernel: &KernelSpec, d: usize, r: f64, sigma: f64, horizon: usize, grid_size: usize) -> Result<GammaEstimate> {
    kernel.validate()?;
    if !(sigma > 0.0) {
        return Err(Error::Unsupported("information gain diverges for σ = 0".into()));
    }
    if grid_size < horizon {
        return Err(Error::invalid(format!("grid size {grid_size} is below T = {horizon}")));
    }
    let domain = BoxDomain::new(d, r, 1.0)?;
    let n = ((powf(grid_size as f64, 1.0 / d as f64) + 0.5) as usize).max(2);
    let n = {
        let mut n = n;
        while powf(n as f64, d as f64) < horizon as f64 {
            n += 1;
        }
        n
    };
    let points = lattice_points(&domain, n);
    let m = points.len();
    let noise = sigma * sigma;
    let inv = 1.0 / noise;
    let mut var: Vec<f64> = vec![1.0; m];
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(horizon);
    let mut series = Vec::with_capacity(horizon);
    let mut picks = Vec::with_capacity(horizon);
    let mut total = 0.0;
    for _ in 0..horizon {
        let mut p = 0;
        for j in 1..m {
            if var[j] > var[p] {
                p = j;
            }
        }
        let vp = var[p].max(0.0);
        total += 0.5 * ln_1p(inv * vp);
        series.push(total);
        picks.push(p);
        let scale = 1.0 / sqrt(vp + noise);
        let mut col = vec![0.0; m];
        for j in 0..m {
            let mut c = kernel.cov(&points[j], &points[p]);
            for u in &cols {
                c -= u[j] * u[p];
            }
            col[j] = c * scale;
            var[j] -= col[j] * col[j];
        }
        cols.push(col);
    }
    Ok(GammaEstimate {
        gamma: total,
        series,
        grid_size: m,
        picks,
    })
}

fn lattice_points(domain: &BoxDomain, n: usize) -> Vec<Vec<f64>> {
    let d = domain.d;
    let total = powf(n as f64, d as f64) as usize;
    (0..total)
        .map(|idx| {
            let mut x = vec![0.0; d];
            let mut rem = idx;
            for i in (0..d).rev() {
                let k = rem % n;
                x[i] = if k + 1 == n { domain.r } else { domain.r * k as f64 / (n - 1) as f64 };
                rem /= n;
            }
            x
        })
        .collect()
}
