//! Standard normal helpers and the normalized EI profile.

use core::f64::consts::{FRAC_1_SQRT_2, PI};

/// `1 / sqrt(2π)`, i.e. `φ(0)`.
pub const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Standard normal density.
pub fn norm_pdf(z: f64) -> f64 {
    INV_SQRT_2PI * libm::exp(-0.5 * z * z)
}

/// Standard normal CDF, via `erfc` so the lower tail keeps full relative
/// precision.
pub fn norm_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z * FRAC_1_SQRT_2)
}

/// `τ(z) = zΦ(z) + φ(z)`, the expected improvement of a unit-scale Gaussian
/// whose mean sits `z` below the incumbent. Positive everywhere, `τ'(z) = Φ(z)`.
pub fn tau(z: f64) -> f64 {
    if z < -8.0 {
        // zΦ(z) + φ(z) cancels catastrophically in the far tail. Use the
        // asymptotic expansion of the Mills ratio instead:
        // τ(z) = φ(z) * (1/z² - 3/z⁴ + 15/z⁶ - 105/z⁸ + ...)
        let w = 1.0 / (z * z);
        let series = w * (1.0 - 3.0 * w * (1.0 - 5.0 * w * (1.0 - 7.0 * w * (1.0 - 9.0 * w))));
        norm_pdf(z) * series
    } else {
        z * norm_cdf(z) + norm_pdf(z)
    }
}

pub(crate) fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

pub(crate) fn ln(x: f64) -> f64 {
    libm::log(x)
}

pub(crate) fn exp(x: f64) -> f64 {
    libm::exp(x)
}

pub(crate) fn powf(x: f64, y: f64) -> f64 {
    libm::pow(x, y)
}

pub(crate) fn ceil(x: f64) -> f64 {
    libm::ceil(x)
}

pub(crate) fn floor(x: f64) -> f64 {
    libm::floor(x)
}

pub(crate) fn sin(x: f64) -> f64 {
    libm::sin(x)
}

pub(crate) fn cos(x: f64) -> f64 {
    libm::cos(x)
}

pub(crate) fn ln_1p(x: f64) -> f64 {
    libm::log1p(x)
}

/// `π_t = π² t² / 6`, the summable weight sequence used by every union bound.
pub fn pi_t(t: usize) -> f64 {
    let t = t as f64;
    PI * PI * t * t / 6.0
}

pub(crate) fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
