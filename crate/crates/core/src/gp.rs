//! Exact zero-mean GP regression with an incrementally extended Cholesky
//! factor of `K + σ²I`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::KernelSpec;
use crate::linalg::{dot, PackedLower};
use crate::math::sqrt;
use crate::rng;

/// Jitter levels tried, in order, when a pivot fails.
pub const JITTER_LADDER: [f64; 5] = [1e-10, 1e-9, 1e-8, 1e-7, 1e-6];

/// Largest tolerated negative posterior variance before clamping.
pub const VARIANCE_FLOOR: f64 = -1e-10;

/// Serializable snapshot of a model, enough to rebuild it exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpStateDump {
    pub kernel: KernelSpec,
    pub sigma: f64,
    pub jitter: f64,
    pub points: Vec<Vec<f64>>,
    pub observations: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct GpState {
    kernel: KernelSpec,
    sigma: f64,
    jitter: f64,
    points: Vec<Vec<f64>>,
    observations: Vec<f64>,
    chol: PackedLower,
    /// `(K + σ²I + jitter·I)⁻¹ y`
    weights: Vec<f64>,
}

impl GpState {
    /// Prior model with no data.
    pub fn new(kernel: KernelSpec, sigma: f64) -> Result<Self> {
        kernel.validate()?;
        if !(sigma >= 0.0) || !sigma.is_finite() {
            return Err(Error::config(
                "schedule.sigma",
                format!("model noise must be finite and non-negative, got {sigma}"),
            ));
        }
        Ok(GpState {
            kernel,
            sigma,
            jitter: if sigma > 0.0 { 0.0 } else { JITTER_LADDER[0] },
            points: Vec::new(),
            observations: Vec::new(),
            chol: PackedLower::new(),
            weights: Vec::new(),
        })
    }

    /// Builds the model from scratch with a full factorization.
    pub fn from_data(
        kernel: KernelSpec,
        sigma: f64,
        points: Vec<Vec<f64>>,
        observations: Vec<f64>,
    ) -> Result<Self> {
        let mut s = Self::new(kernel, sigma)?;
        if points.len() != observations.len() {
            return Err(Error::invalid("points and observations differ in length"));
        }
        if let Some(p) = points.first() {
            let d = p.len();
            if d == 0 || points.iter().any(|q| q.len() != d) {
                return Err(Error::invalid("sample points must share a positive dimension"));
            }
        }
        if observations.iter().any(|y| !y.is_finite()) {
            return Err(Error::Numeric("non-finite observation".into()));
        }
        s.points = points;
        s.observations = observations;
        if !s.points.is_empty() {
            s.refactor(s.jitter)?;
        }
        Ok(s)
    }

    pub fn from_dump(dump: &GpStateDump) -> Result<Self> {
        Self::from_data(
            dump.kernel,
            dump.sigma,
            dump.points.clone(),
            dump.observations.clone(),
        )
    }

    pub fn dump(&self) -> GpStateDump {
        GpStateDump {
            kernel: self.kernel,
            sigma: self.sigma,
            jitter: self.jitter,
            points: self.points.clone(),
            observations: self.observations.clone(),
        }
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Diagonal jitter currently added on top of `σ²`.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> Option<usize> {
        self.points.first().map(Vec::len)
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn observations(&self) -> &[f64] {
        &self.observations
    }

    fn noise_diag(&self, jitter: f64) -> f64 {
        1.0 + self.sigma * self.sigma + jitter
    }

    /// Refactors at `start` jitter, escalating along the ladder on failure.
    fn refactor(&mut self, start: f64) -> Result<()> {
        let n = self.points.len();
        let mut gram = self.kernel.gram(&self.points)?;
        let base = self.sigma * self.sigma;
        for i in 0..n {
            gram[i * n + i] += base;
        }
        let mut levels = Vec::with_capacity(JITTER_LADDER.len() + 1);
        if start == 0.0 {
            levels.push(0.0);
        }
        levels.extend(JITTER_LADDER.iter().copied().filter(|&j| j >= start));
        let mut last_pivot = 0;
        for jitter in levels {
            match PackedLower::factor(&gram, n, jitter) {
                Ok(l) => {
                    self.chol = l;
                    self.jitter = jitter;
                    self.weights = self.chol.solve(&self.observations);
                    return Ok(());
                }
                Err(p) => last_pivot = p,
            }
        }
        Err(Error::SingularModel {
            pivot: last_pivot,
            jitter: JITTER_LADDER[JITTER_LADDER.len() - 1],
        })
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        match self.dim() {
            Some(d) if d != x.len() => Err(Error::invalid(format!(
                "point has dimension {}, model has {}",
                x.len(),
                d
            ))),
            _ if x.is_empty() => Err(Error::invalid("empty point")),
            _ => Ok(()),
        }
    }

    /// Appends an observation, extending the factor by one row. If the new
    /// pivot fails, the whole factor is rebuilt with more jitter.
    pub fn push(&mut self, x: Vec<f64>, y: f64) -> Result<()> {
        self.check_dim(&x)?;
        if !y.is_finite() {
            return Err(Error::Numeric(format!("non-finite observation {y} at {x:?}")));
        }
        let cross = self.kernel.cross(&self.points, &x);
        let diag = self.noise_diag(self.jitter);
        self.points.push(x);
        self.observations.push(y);
        if self.chol.push_row(&cross, diag) {
            self.weights = self.chol.solve(&self.observations);
            return Ok(());
        }
        let next = JITTER_LADDER
            .iter()
            .copied()
            .find(|&j| j > self.jitter)
            .unwrap_or(f64::INFINITY);
        let result = if next.is_finite() {
            self.refactor(next)
        } else {
            Err(Error::SingularModel {
                pivot: self.points.len() - 1,
                jitter: self.jitter,
            })
        };
        if result.is_err() {
            self.points.pop();
            self.observations.pop();
        }
        result
    }

    /// Returns a new model with one more observation.
    pub fn update(&self, x: &[f64], y: f64) -> Result<GpState> {
        let mut next = self.clone();
        next.push(x.to_vec(), y)?;
        Ok(next)
    }

    /// `L⁻¹ k_t(x)`.
    fn whitened_cross(&self, x: &[f64]) -> Vec<f64> {
        let mut v = self.kernel.cross(&self.points, x);
        self.chol.forward_in_place(&mut v);
        v
    }

    /// Posterior mean and raw (unclamped) variance.
    pub fn mean_and_raw_variance(&self, x: &[f64]) -> Result<(f64, f64)> {
        self.check_dim(x)?;
        if self.points.is_empty() {
            return Ok((0.0, 1.0));
        }
        let k = self.kernel.cross(&self.points, x);
        let mean = dot(&k, &self.weights);
        let mut v = k;
        self.chol.forward_in_place(&mut v);
        let var = 1.0 - dot(&v, &v);
        if !mean.is_finite() || !var.is_finite() {
            return Err(Error::Numeric(format!("non-finite posterior at {x:?}")));
        }
        Ok((mean, var))
    }

    /// `(μ_t(x), σ_t(x))` with the variance clamped to `[0, 1]`.
    pub fn posterior(&self, x: &[f64]) -> Result<(f64, f64)> {
        let (mean, var) = self.mean_and_raw_variance(x)?;
        if var < VARIANCE_FLOOR {
            return Err(Error::Numeric(format!(
                "posterior variance {var:e} below tolerance at {x:?}"
            )));
        }
        Ok((mean, sqrt(var.clamp(0.0, 1.0))))
    }

    /// `h_t(x) = (K_t + σ²I)⁻¹ k_t(x)`.
    pub fn noise_weights(&self, x: &[f64]) -> Result<Vec<f64>> {
        if self.sigma == 0.0 {
            return Err(Error::Unsupported(
                "noise weights are undefined for a noiseless model".into(),
            ));
        }
        if self.points.is_empty() {
            return Err(Error::invalid("noise weights need at least one observation"));
        }
        self.check_dim(x)?;
        Ok(self.chol.solve(&self.kernel.cross(&self.points, x)))
    }

    /// Dense row-major posterior covariance on `points`.
    pub fn posterior_covariance(&self, points: &[Vec<f64>]) -> Result<Vec<f64>> {
        let m = points.len();
        for p in points {
            self.check_dim(p)?;
        }
        let white: Vec<Vec<f64>> = points.iter().map(|p| self.whitened_cross(p)).collect();
        let mut cov = vec![0.0; m * m];
        for i in 0..m {
            for j in 0..=i {
                let prior = if i == j {
                    1.0
                } else {
                    self.kernel.cov(&points[i], &points[j])
                };
                let v = prior - dot(&white[i], &white[j]);
                cov[i * m + j] = v;
                cov[j * m + i] = v;
            }
        }
        Ok(cov)
    }

    /// One joint draw from `N(μ_t(points), ν Σ_t(points))`.
    pub fn sample_on_set(&self, points: &[Vec<f64>], nu: f64, seed: u64) -> Result<Vec<f64>> {
        if points.is_empty() {
            return Err(Error::invalid("cannot sample on an empty set"));
        }
        if !(nu >= 0.0) || !nu.is_finite() {
            return Err(Error::invalid(format!("sample scale must be non-negative, got {nu}")));
        }
        let mut mean = Vec::with_capacity(points.len());
        for p in points {
            mean.push(self.mean_and_raw_variance(p)?.0);
        }
        if nu == 0.0 {
            return Ok(mean);
        }
        let m = points.len();
        let cov = self.posterior_covariance(points)?;
        let mut factor = None;
        let mut last_pivot = 0;
        for jitter in core::iter::once(0.0).chain(JITTER_LADDER) {
            match PackedLower::factor(&cov, m, jitter) {
                Ok(l) => {
                    factor = Some(l);
                    break;
                }
                Err(p) => last_pivot = p,
            }
        }
        let factor = factor.ok_or(Error::SingularModel {
            pivot: last_pivot,
            jitter: JITTER_LADDER[JITTER_LADDER.len() - 1],
        })?;
        let mut r = rng::from_seed(seed);
        let z: Vec<f64> = (0..m).map(|_| rng::normal(&mut r)).collect();
        let scale = sqrt(nu);
        Ok(factor
            .mul_vec(&z)
            .into_iter()
            .zip(mean)
            .map(|(e, mu)| mu + scale * e)
            .collect())
    }

    /// Relative Frobenius error of `L Lᵀ` against `K + (σ² + jitter) I`.
    pub fn factor_residual(&self) -> f64 {
        let n = self.points.len();
        if n == 0 {
            return 0.0;
        }
        let mut target = self.kernel.gram(&self.points).unwrap_or_default();
        for i in 0..n {
            target[i * n + i] += self.sigma * self.sigma + self.jitter;
        }
        let back = self.chol.reconstruct();
        let num: f64 = target.iter().zip(&back).map(|(a, b)| (a - b) * (a - b)).sum();
        let den: f64 = target.iter().map(|a| a * a).sum();
        sqrt(num / den)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::KernelFamily;
    use approx::assert_abs_diff_eq;

    fn se(l: f64) -> KernelSpec {
        KernelSpec::new(KernelFamily::SquaredExponential, l).unwrap()
    }

    #[test]
    fn prior_posterior() {
        let gp = GpState::new(se(0.3), 1.0).unwrap();
        assert_eq!(gp.posterior(&[0.4, 0.2]).unwrap(), (0.0, 1.0));
    }

    #[test]
    fn single_observation_closed_form() {
        let gp = GpState::new(se(0.3), 1.0).unwrap().update(&[0.5], 2.0).unwrap();
        let (m, s) = gp.posterior(&[0.5]).unwrap();
        assert_abs_diff_eq!(m, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s, 0.707_106_781_186_547_6, epsilon = 1e-15);
        let h = gp.noise_weights(&[0.5]).unwrap();
        assert_abs_diff_eq!(h[0], 0.5, epsilon = 1e-15);
        let (m, s) = gp.posterior(&[50.0]).unwrap();
        assert!(m.abs() < 1e-12 && (s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn noiseless_duplicate_triggers_jitter() {
        let mut gp = GpState::new(se(0.3), 0.0).unwrap();
        gp.push(vec![0.2], 1.0).unwrap();
        gp.push(vec![0.2], 1.0).unwrap();
        assert!(gp.jitter() >= JITTER_LADDER[0]);
        let (m, _) = gp.posterior(&[0.2]).unwrap();
        assert!((m - 1.0).abs() < 1e-4);
        let scratch = GpState::from_data(*gp.kernel(), 0.0, gp.points().to_vec(), vec![1.0, 1.0]).unwrap();
        let (m2, s2) = scratch.posterior(&[0.35]).unwrap();
        let (m1, s1) = gp.posterior(&[0.35]).unwrap();
        assert!((m1 - m2).abs() < 1e-8 && (s1 - s2).abs() < 1e-8);
    }

    #[test]
    fn noise_weights_require_noise() {
        let gp = GpState::new(se(0.3), 0.0).unwrap().update(&[0.1], 0.0).unwrap();
        assert!(matches!(gp.noise_weights(&[0.1]), Err(Error::Unsupported(_))));
    }

    #[test]
    fn rejects_nonfinite_and_dimension_mismatch() {
        let gp = GpState::new(se(0.3), 0.1).unwrap().update(&[0.1, 0.2], 0.0).unwrap();
        assert!(matches!(gp.update(&[0.1, 0.2], f64::NAN), Err(Error::Numeric(_))));
        assert!(matches!(gp.posterior(&[0.1]), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn zero_scale_sample_is_mean() {
        let gp = GpState::new(se(0.3), 0.1)
            .unwrap()
            .update(&[0.1], 1.0)
            .unwrap();
        let pts = vec![vec![0.0], vec![0.1], vec![0.7]];
        let s = gp.sample_on_set(&pts, 0.0, 3).unwrap();
        for (p, v) in pts.iter().zip(&s) {
            assert_eq!(*v, gp.posterior(p).unwrap().0);
        }
    }
}
