use bo_core::engine::{stopping, RecordFlag};
use bo_core::objectives::{FnObjective, Optimum};
use bo_core::{
    run, AcquisitionKind, AcquisitionSpec, BoxDomain, KernelFamily, KernelSpec, Objective, RegretDefinition, RunConfig,
    ScheduleParams, StoppingRule,
};

fn bowl() -> FnObjective<impl Fn(&[f64]) -> f64> {
    FnObjective {
        f: |x: &[f64]| (x[0] - 0.5) * (x[0] - 0.5),
        domain: BoxDomain::new(1, 1.0, 1.0).unwrap(),
        optimum: Optimum { f_star: 0.0, x_star: vec![vec![0.5]], f_max: 0.25 },
    }
}

fn config(kind: AcquisitionKind, horizon: usize, seed: u64, sigma_eps: f64) -> RunConfig {
    let domain = BoxDomain::new(1, 1.0, 1.0).unwrap();
    let params = ScheduleParams::new(1.0, 0.1, 0.01, sigma_eps, 1, 1.0, 1.0).unwrap();
    let kernel = KernelSpec::new(KernelFamily::SquaredExponential, 0.2).unwrap();
    let mut acq = AcquisitionSpec::new(kind);
    acq.theta = Some(1.0);
    RunConfig::new(domain, kernel, acq, params, horizon, seed)
}

#[test]
fn single_step_is_initialization() {
    let f = bowl();
    for kind in AcquisitionKind::ALL {
        let trace = run(&config(kind, 1, 3, 0.0), &f).unwrap();
        assert_eq!(trace.records.len(), 1);
        let r = &trace.records[0];
        assert!(r.has(RecordFlag::Init));
        assert_eq!(r.sigma_prev, 1.0);
        assert_eq!(r.mu_prev, 0.0);
        assert_eq!(r.y, r.f_x);
        assert_eq!(r.y_plus, r.y);
    }
}

#[test]
fn ei_converges_on_quadratic() {
    let f = bowl();
    let trace = run(&config(AcquisitionKind::Ei, 30, 11, 0.0), &f).unwrap();
    assert!(trace.final_incumbent() <= 1e-2, "{}", trace.final_incumbent());
    // exhaustive grid reference
    let grid_best = (0..=1000).map(|i| f.eval(&[i as f64 / 1000.0])).fold(f64::INFINITY, f64::min);
    assert!(trace.final_incumbent() - grid_best <= 1e-2);
}

#[test]
fn runs_are_deterministic() {
    let f = bowl();
    for kind in AcquisitionKind::ALL {
        let a = run(&config(kind, 12, 5, 0.05), &f).unwrap();
        let b = run(&config(kind, 12, 5, 0.05), &f).unwrap();
        assert_eq!(a, b, "{kind}");
        let c = run(&config(kind, 12, 6, 0.05), &f).unwrap();
        assert_ne!(a.records, c.records);
    }
}

#[test]
fn trace_invariants() {
    let f = bowl();
    for kind in AcquisitionKind::ALL {
        let cfg = config(kind, 20, 8, 0.05);
        let trace = run(&cfg, &f).unwrap();
        assert_eq!(trace.regret, RegretDefinition::default_for(kind));
        let mut prev = f64::INFINITY;
        let mut cum = 0.0;
        for (i, r) in trace.records.iter().enumerate() {
            assert_eq!(r.t, i + 1);
            assert!(r.y_plus <= prev);
            assert!(r.y_plus <= r.y);
            assert!(cfg.domain.contains(&r.x));
            assert!(r.sigma_prev >= 0.0 && r.sigma_prev <= 1.0);
            cum += r.r_inst;
            assert!((cum - r.r_cum).abs() < 1e-12);
            prev = r.y_plus;
            if kind == AcquisitionKind::Ts && !r.has(RecordFlag::Init) {
                let disc = cfg.domain.lattice(r.t, cfg.grid_cap).unwrap();
                assert_eq!(disc.len(), r.grid_size.unwrap());
                let (_, p) = disc.closest(&r.x).unwrap();
                assert_eq!(p, r.x);
            }
        }
    }
}

#[test]
fn improvement_regret_is_nonnegative() {
    let f = bowl();
    let trace = run(&config(AcquisitionKind::Vei, 25, 2, 0.05), &f).unwrap();
    assert_eq!(trace.regret, RegretDefinition::Improvement);
    assert!(trace.records.iter().all(|r| r.r_inst >= 0.0));
}

#[test]
fn stall_rule_fires_on_constant_objective() {
    let flat = FnObjective {
        f: |_: &[f64]| 1.0,
        domain: BoxDomain::new(1, 1.0, 1.0).unwrap(),
        optimum: Optimum { f_star: 1.0, x_star: vec![vec![0.0]], f_max: 1.0 },
    };
    let mut cfg = config(AcquisitionKind::Ei, 40, 1, 0.0);
    cfg.init = 3;
    cfg.stopping = StoppingRule::Stall { tol: 0.0, k: 4 };
    let trace = run(&cfg, &flat).unwrap();
    assert!(trace.stopped_early);
    assert_eq!(trace.records.len(), 7);
    assert!(trace.records.last().unwrap().has(RecordFlag::Stopped));
    assert!(!stopping(&cfg.stopping, &trace.records[..6], 3));
}

#[test]
fn horizon_rule_runs_to_the_end() {
    let f = bowl();
    let trace = run(&config(AcquisitionKind::Ucb, 9, 1, 0.0), &f).unwrap();
    assert_eq!(trace.records.len(), 9);
    assert!(!trace.stopped_early);
}

#[test]
fn rejects_inconsistent_configs() {
    let f = bowl();
    let mut cfg = config(AcquisitionKind::Ei, 5, 1, 0.0);
    cfg.init = 6;
    assert!(run(&cfg, &f).is_err());
    let mut cfg = config(AcquisitionKind::Ucb, 5, 1, 0.0);
    cfg.stopping = StoppingRule::AcqBelow { tol: 0.1 };
    assert!(run(&cfg, &f).is_err());
}
