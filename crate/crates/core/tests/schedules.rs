use approx::assert_abs_diff_eq;
use bo_core::schedules::{
    c_gamma, check_ei_constants, constants, ConvergenceConstants, ScheduleVariant, VeiLogFactor, C3,
};
use bo_core::{Error, ScheduleParams};
use proptest::prelude::*;

fn unit(delta: f64) -> ScheduleParams {
    ScheduleParams::new(1.0, delta, 1.0, 1.0, 1, 1.0, 1.0).unwrap()
}

#[test]
fn reference_values() {
    let p = unit(0.1);
    assert_abs_diff_eq!(p.beta_ucb(1), 3.893_641_220_533_286, epsilon = 1e-12);
    assert_abs_diff_eq!(p.nu_sqrt(1), 3.893_641_220_533_286, epsilon = 1e-12);
    assert_abs_diff_eq!(p.c_t(1), 1.177_410_022_515_475, epsilon = 1e-12);
    assert_abs_diff_eq!(p.zeta_sqrt(1).1, 8.478_053_417_668_562, epsilon = 1e-12);
    assert_abs_diff_eq!(p.ei_beta_sqrt(ScheduleVariant::Pointwise, 1), 4.177_842_882_912_253, epsilon = 1e-12);
    let (vs, theta) = p.vei(1).unwrap();
    assert_abs_diff_eq!(vs * vs, 10.006_457_734_954_88, epsilon = 1e-10);
    assert_abs_diff_eq!(vs, 3.163_298_552_927_763, epsilon = 1e-12);
    assert_eq!(vs, theta);
    assert_abs_diff_eq!(p.vei_fixed_beta(), 7.217_587_751_276_448, epsilon = 1e-12);
    assert_abs_diff_eq!(c_gamma(1.0), 11.541_560_327_111_707, epsilon = 1e-12);
    let k = constants(1.0);
    assert_abs_diff_eq!(k.p, 0.051_888_437_177_574_34, epsilon = 1e-15);
    assert!(k.phi0 < 0.4);
}

#[test]
fn vei_domain_restrictions() {
    assert!(matches!(unit(0.7).vei(1), Err(Error::Config { .. })));
    assert!(unit(0.69).vei(1).is_ok());
    assert!(unit(0.43).ei_star_beta().is_err());
    assert!(unit(0.42).ei_star_beta().is_ok());
}

#[test]
fn vei_dimension_multiplicity() {
    let mut p = ScheduleParams::new(1.0, 0.1, 1.0, 1.0, 3, 1.0, 1.0).unwrap();
    let one = p.vei(4).unwrap().0.powi(2);
    p.vei_log_factor = VeiLogFactor::Dimension;
    let three = p.vei(4).unwrap().0.powi(2);
    assert_abs_diff_eq!(three - one, 2.0 * p.lattice_log(4) / 0.427, epsilon = 1e-10);
}

#[test]
fn rejects_bad_parameters() {
    assert!(ScheduleParams::new(0.5, 0.1, 1.0, 1.0, 1, 1.0, 1.0).is_err());
    assert!(ScheduleParams::new(1.0, 1.0, 1.0, 1.0, 1, 1.0, 1.0).is_err());
    assert!(ScheduleParams::new(1.0, 0.1, 0.0, 1.0, 1, 1.0, 1.0).is_err());
    assert!(ScheduleParams::new(1.0, 0.1, 1.0, -1.0, 1, 1.0, 1.0).is_err());
}

#[test]
fn constants_checker_cases() {
    let rep = check_ei_constants(ConvergenceConstants::from_c3(1.0, C3, 2.0, 1.0, 1.0), 1000).unwrap();
    assert!(!rep.c.ok);
    assert_abs_diff_eq!(rep.c.lhs, 0.022_750_131_948_179_2, epsilon = 1e-12);
    assert!(check_ei_constants(ConvergenceConstants::from_c3(1.0, C3, 2.0, 1.0, 1.0), 10).is_err());
}

proptest! {
    #[test]
    fn widths_grow_with_t(t in 1usize..10_000, d in 1usize..5, delta in 0.01f64..0.6) {
        let p = ScheduleParams::new(1.5, delta, 0.3, 0.2, d, 2.0, 3.0).unwrap();
        for v in ScheduleVariant::ALL {
            prop_assert!(p.beta_sqrt(v, t + 1) >= p.beta_sqrt(v, t));
        }
        prop_assert!(p.nu_sqrt(t + 1) >= p.nu_sqrt(t));
        prop_assert!(p.zeta_sqrt(t + 1).1 >= p.zeta_sqrt(t).1);
        prop_assert!(p.vei(t + 1).unwrap().0 >= p.vei(t).unwrap().0);
    }

    #[test]
    fn widths_shrink_with_delta(t in 1usize..1000, delta in 0.01f64..0.5) {
        let a = ScheduleParams::new(1.0, delta, 0.3, 0.3, 2, 1.0, 1.0).unwrap();
        let b = ScheduleParams::new(1.0, delta * 1.2, 0.3, 0.3, 2, 1.0, 1.0).unwrap();
        for v in ScheduleVariant::ALL {
            prop_assert!(b.beta_sqrt(v, t) <= a.beta_sqrt(v, t));
        }
        prop_assert!(b.vei(t).unwrap().0 <= a.vei(t).unwrap().0);
    }

    #[test]
    fn discrete_is_finite_set_form(t in 1usize..500, d in 1usize..4, r in 0.1f64..5.0, l in 0.1f64..10.0) {
        let p = ScheduleParams::new(1.0, 0.1, 0.5, 0.5, d, r, l).unwrap();
        let card = (1.0 + r * (t * t) as f64 * l).powi(d as i32);
        let a = p.beta_sqrt(ScheduleVariant::Discrete, t);
        prop_assert!((a - p.beta_discrete(t, card)).abs() < 1e-9 * a);
        let c = p.beta_sqrt(ScheduleVariant::Compact, t);
        prop_assert!((c - p.beta_discrete(t, 2.0 * card)).abs() < 1e-9 * c);
    }
}
