use approx::assert_abs_diff_eq;
use bo_core::acquisition::{ei_from_parts, sigma_pow, ts_select, ucb_value, vei_value, ei_value};
use bo_core::diagnostics::{fandnu_upper, fnu_lower};
use bo_core::gp::GpState;
use bo_core::math::{norm_cdf, norm_pdf, tau};
use bo_core::{BoxDomain, Incumbent, KernelFamily, KernelSpec};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn ei_matches_tau_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(30);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let a = 6.0 * rng.random::<f64>() - 3.0;
        let b = 0.01 + 2.0 * rng.random::<f64>();
        let direct = a * norm_cdf(a / b) + b * norm_pdf(a / b);
        worst = worst.max((ei_from_parts(a, b) - b * tau(a / b)).abs());
        worst = worst.max((ei_from_parts(a, b) - direct.max(0.0)).abs());
    }
    assert!(worst < 1e-12, "{worst}");
}

#[test]
fn t_one_closed_forms() {
    let k = KernelSpec::new(KernelFamily::SquaredExponential, 0.2).unwrap();
    let gp = GpState::new(k, 1.0).unwrap().update(&[0.4], 3.0).unwrap();
    assert_abs_diff_eq!(ucb_value(&gp, &[0.4], 2.0).unwrap(), 1.5 + 2.0 * 0.5f64.sqrt(), epsilon = 1e-13);
    let prior = GpState::new(k, 1.0).unwrap();
    let inc = Incumbent { y_plus: 0.0, x_plus: vec![0.0] };
    assert_abs_diff_eq!(ei_value(&prior, &[0.7], &inc, 1.0).unwrap(), 0.398_942_280_401_432_7, epsilon = 1e-14);
    assert_abs_diff_eq!(vei_value(&prior, &[0.7], &inc, 1.0, 0.5).unwrap(), 0.898_942_280_401_432_7, epsilon = 1e-14);
}

#[test]
fn sigma_power_edge_cases() {
    assert_eq!(sigma_pow(0.0, 0.5), 0.0);
    assert_eq!(sigma_pow(0.3, 1.0), 0.3);
    assert_abs_diff_eq!(sigma_pow(0.25, 0.5), 0.5, epsilon = 1e-15);
}

#[test]
fn ts_without_scale_is_posterior_mean_argmax() {
    let k = KernelSpec::new(KernelFamily::SquaredExponential, 0.2).unwrap();
    let gp = GpState::new(k, 0.1).unwrap().update(&[0.3], 1.0).unwrap().update(&[0.8], -1.0).unwrap();
    let disc = BoxDomain::new(1, 1.0, 1.0).unwrap().lattice(4, 10_000).unwrap();
    let sel = ts_select(&gp, &disc, 0.0, 7, 2048).unwrap();
    let means: Vec<f64> = disc.points().iter().map(|p| gp.posterior(p).unwrap().0).collect();
    let best = means.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    assert_eq!(means[sel.index], best);
    assert_eq!(sel.point, disc.point(sel.index));
}

#[test]
fn ts_uniform_on_independent_points() {
    let k = KernelSpec::new(KernelFamily::SquaredExponential, 1e-3).unwrap();
    let gp = GpState::new(k, 0.1).unwrap();
    let disc = BoxDomain::new(1, 1.0, 1.0).unwrap().lattice(2, 10_000).unwrap();
    let m = disc.len();
    assert_eq!(m, 3);
    let n = 10_000;
    let mut counts = vec![0usize; m];
    for seed in 0..n {
        counts[ts_select(&gp, &disc, 1.0, seed, 2048).unwrap().index] += 1;
    }
    let expected = n as f64 / m as f64;
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    // 99.9% quantile of chi-square with 2 degrees of freedom
    assert!(chi2 < 13.815, "{counts:?} chi2={chi2}");
}

#[test]
fn ts_is_deterministic_and_chunks() {
    let k = KernelSpec::new(KernelFamily::Matern52, 0.3).unwrap();
    let gp = GpState::new(k, 0.1).unwrap().update(&[0.3, 0.3], 1.0).unwrap();
    let disc = BoxDomain::new(2, 1.0, 1.0).unwrap().lattice(3, 10_000).unwrap();
    let a = ts_select(&gp, &disc, 1.0, 99, 2048).unwrap();
    let b = ts_select(&gp, &disc, 1.0, 99, 2048).unwrap();
    assert_eq!(a, b);
    assert!(!a.chunked);
    let c = ts_select(&gp, &disc, 1.0, 99, 5).unwrap();
    assert!(c.chunked);
    assert_eq!(c.point, disc.point(c.index));
}

#[test]
fn improvement_gap_bounds() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut lower_checked = 0;
    for _ in 0..20_000 {
        let y_plus = 4.0 * rng.random::<f64>() - 2.0;
        let mu = 4.0 * rng.random::<f64>() - 2.0;
        let sigma = 0.01 + rng.random::<f64>();
        let f = 4.0 * rng.random::<f64>() - 2.0;
        let w = 0.05 + 4.0 * rng.random::<f64>();
        let gap = (y_plus - f).max(0.0) - ei_from_parts(y_plus - mu, sigma);
        assert!(gap < fandnu_upper(y_plus, f, mu, sigma, w) + 1e-12);
        if w > 1.0 && f - mu < sigma * w {
            assert!(gap > fnu_lower(sigma, w) - 1e-12, "y+={y_plus} mu={mu} s={sigma} f={f} w={w}");
            lower_checked += 1;
        }
    }
    assert!(lower_checked > 1000);
}

proptest! {
    #[test]
    fn ei_sandwich(a in -5.0f64..5.0, b in 1e-3f64..3.0) {
        let ei = ei_from_parts(a, b);
        prop_assert!(ei >= a.max(0.0) - 1e-12);
        prop_assert!(ei <= a.max(0.0) + b * 0.398_942_280_401_432_7 + 1e-12);
    }

    #[test]
    fn ei_monotone(a in -4.0f64..4.0, b in 0.01f64..3.0, da in 0.0f64..1.0, db in 0.0f64..1.0) {
        prop_assert!(ei_from_parts(a + da, b) >= ei_from_parts(a, b) - 1e-12);
        prop_assert!(ei_from_parts(a, b + db) >= ei_from_parts(a, b) - 1e-12);
    }

    #[test]
    fn vei_adds_linear_bonus(y in -2.0f64..2.0, x in 0.0f64..1.0, theta in 0.0f64..3.0, alpha in 0.1f64..1.0) {
        let k = KernelSpec::new(KernelFamily::Matern32, 0.3).unwrap();
        let gp = GpState::new(k, 0.2).unwrap().update(&[0.5], y).unwrap();
        let inc = Incumbent::from_state(&gp).unwrap();
        let ei = ei_value(&gp, &[x], &inc, alpha).unwrap();
        let v0 = vei_value(&gp, &[x], &inc, alpha, 0.0).unwrap();
        let v1 = vei_value(&gp, &[x], &inc, alpha, theta).unwrap();
        let v2 = vei_value(&gp, &[x], &inc, alpha, 2.0 * theta).unwrap();
        prop_assert!((v0 - ei).abs() < 1e-15);
        prop_assert!(v1 >= ei);
        prop_assert!(((v2 - v1) - (v1 - v0)).abs() < 1e-12);
    }

    #[test]
    fn ucb_shift_invariance(y in -2.0f64..2.0, c in -5.0f64..5.0, x in 0.0f64..1.0, beta in 0.0f64..5.0) {
        let k = KernelSpec::new(KernelFamily::SquaredExponential, 0.3).unwrap();
        let base = GpState::new(k, 0.3).unwrap().update(&[0.2], y).unwrap().update(&[0.7], -y).unwrap();
        let shifted = GpState::new(k, 0.3).unwrap().update(&[0.2], y + c).unwrap().update(&[0.7], -y + c).unwrap();
        let prior = GpState::new(k, 0.3).unwrap().update(&[0.2], c).unwrap().update(&[0.7], c).unwrap();
        let lhs = ucb_value(&shifted, &[x], beta).unwrap();
        let rhs = ucb_value(&base, &[x], beta).unwrap() + prior.posterior(&[x]).unwrap().0;
        prop_assert!((lhs - rhs).abs() < 1e-10);
    }
}
