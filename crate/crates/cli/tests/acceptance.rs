//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use bo_cli::sweep::median;
use bo_cli::trace_csv::read_trace_file;
use bo_cli::{run_sweep, Plan};
use bo_core::acquisition::{ei_from_parts, ei_value, sigma_pow, vei_value};
use bo_core::diagnostics::{coverage_test, variance_sum_check, CoverageKind, CoverageParams};
use bo_core::math::{norm_cdf, norm_pdf, tau};
use bo_core::rng::{from_seed, normal, uniform, StreamRng};
use bo_core::schedules::{check_ei_constants, ConvergenceConstants};
use bo_core::{BoxDomain, GpState, Incumbent, KernelFamily, KernelSpec};
use rand::Rng;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn points(rng: &mut StreamRng, n: usize, d: usize, r: f64) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..d).map(|_| r * uniform(rng)).collect()).collect()
}

fn random_kernel(rng: &mut StreamRng) -> KernelSpec {
    let fam = KernelFamily::ALL[rng.random_range(0..4)];
    KernelSpec::new(fam, 0.05 + 1.5 * uniform(rng)).unwrap()
}

fn noise_weights() -> Outcome {
    let mut rng = from_seed(101);
    let mut worst = f64::NEG_INFINITY;
    for trial in 0..1000 {
        let k = random_kernel(&mut rng);
        let d = rng.random_range(1..=3);
        let t = rng.random_range(1..=30);
        let sigma = 0.005 + 2.0 * uniform(&mut rng);
        let xs = points(&mut rng, t, d, 1.0);
        let ys: Vec<f64> = (0..t).map(|_| normal(&mut rng)).collect();
        let gp = GpState::from_data(k, sigma, xs, ys).map_err(|e| e.to_string())?;
        let probe = points(&mut rng, 1, d, 1.0).pop().unwrap();
        let h = gp.noise_weights(&probe).map_err(|e| e.to_string())?;
        let norm = h.iter().map(|v| v * v).sum::<f64>().sqrt();
        let (_, s) = gp.posterior(&probe).map_err(|e| e.to_string())?;
        let excess = norm - s / sigma;
        worst = worst.max(excess);
        ensure(excess <= 1e-8, || format!("instance {trial}: |h| = {norm:e} exceeds {:e}", s / sigma))?;
    }
    Ok(format!("1000 instances, max(|h| - sigma_t/sigma) = {worst:.3e}"))
}

fn coverage() -> Outcome {
    let k = KernelSpec::new(KernelFamily::SquaredExponential, 0.2).unwrap();
    let p = CoverageParams::new(CoverageKind::Pointwise, k, 0.2, 500, 2024);
    let rep = coverage_test(&p).map_err(|e| e.to_string())?;
    let limit = 0.2 + 3.0 * (0.2f64 * 0.8 / 500.0).sqrt();
    ensure(rep.rate <= limit, || format!("violation rate {} > {limit:.4}", rep.rate))?;

    let mut clean = p.clone();
    clean.sigma_eps = 0.0;
    let noiseless = coverage_test(&clean).map_err(|e| e.to_string())?;
    ensure(noiseless.violations == 0, || format!("noiseless violations {}", noiseless.violations))?;
    Ok(format!(
        "rate {:.4} <= {limit:.4} over 500; noiseless rate {}",
        rep.rate, noiseless.rate
    ))
}

fn ei_identities() -> Outcome {
    let mut rng = from_seed(103);
    let mut worst_tau: f64 = 0.0;
    let mut strict = 0;
    for case in 0..10_000 {
        let y_plus = 6.0 * uniform(&mut rng) - 3.0;
        let mu = 6.0 * uniform(&mut rng) - 3.0;
        let sigma = 1e-3 + 2.0 * uniform(&mut rng);
        let alpha = 0.25 + 1.75 * uniform(&mut rng);
        let b = sigma_pow(sigma, alpha);
        let a = y_plus - mu;
        let z = a / b;
        let ei = ei_from_parts(a, b);
        worst_tau = worst_tau.max((ei - b * tau(z)).abs());
        ensure(ei >= 0.0 && ei >= a - 1e-12, || format!("case {case}: EI {ei} below max(a, 0) for a = {a}"))?;
        ensure(z * b <= ei + 1e-12, || format!("case {case}: z b = {} > EI {ei}", z * b))?;
        let upper = if z < 0.0 { norm_pdf(z) * b } else { (z + norm_pdf(z)) * b };
        if ei < upper {
            strict += 1;
        } else {
            ensure(ei - upper <= 4.0 * f64::EPSILON * upper.abs(), || {
                format!("case {case}: EI {ei} not below {upper} (z = {z})")
            })?;
        }
    }
    ensure(worst_tau <= 1e-12, || format!("EI vs b tau(a/b): {worst_tau:e}"))?;

    let h = 1e-5;
    let mut worst_fd: f64 = 0.0;
    for i in 0..=1200 {
        let z = -6.0 + 0.01 * i as f64;
        let fd = (tau(z + h) - tau(z - h)) / (2.0 * h);
        worst_fd = worst_fd.max((fd - norm_cdf(z)).abs());
    }
    ensure(worst_fd <= 1e-6, || format!("tau' vs Phi: {worst_fd:e}"))?;

    for case in 0..500 {
        let k = random_kernel(&mut rng);
        let t = rng.random_range(0..10);
        let xs = points(&mut rng, t, 2, 1.0);
        let ys: Vec<f64> = (0..t).map(|_| normal(&mut rng)).collect();
        let gp = GpState::from_data(k, 0.1, xs, ys).map_err(|e| e.to_string())?;
        let x = points(&mut rng, 1, 2, 1.0).pop().unwrap();
        let inc = Incumbent { y_plus: normal(&mut rng), x_plus: vec![0.0, 0.0] };
        let alpha = 0.5 + uniform(&mut rng);
        let ei = ei_value(&gp, &x, &inc, alpha).map_err(|e| e.to_string())?;
        let vei = vei_value(&gp, &x, &inc, alpha, 0.0).map_err(|e| e.to_string())?;
        ensure(ei.to_bits() == vei.to_bits(), || format!("case {case}: VEI(theta=0) {vei} != EI {ei}"))?;
    }
    Ok(format!(
        "10^4 cases ({strict} strictly inside the upper bound, rest equal to rounding), |EI - b tau| <= {worst_tau:.1e}, |tau' - Phi| <= {worst_fd:.1e}, VEI(0) == EI on 500 states"
    ))
}

fn base_config(kind: &str, horizon: usize, seed: u64, extra: &str) -> String {
    format!("kernel.family = se\ndomain.d = 1\ndomain.r = 1\nacq.kind = {kind}\nrun.T = {horizon}\nrun.seed = {seed}\n{extra}")
}

fn variance_sum() -> Outcome {
    let kinds = ["ucb", "ts", "ei", "vei"];
    let mut terms = 0;
    for run in 0..50 {
        let kind = kinds[run % 4];
        let text = base_config(kind, 30, run as u64 + 1, "acq.theta = 1\ngrid.cap = 441\nts.joint_cap = 441\n");
        let plan = Plan::parse(&text).map_err(|e| e.to_string())?;
        let (trace, _) = bo_cli::run_single(&plan, None).map_err(|e| e.to_string())?;
        let check = variance_sum_check(&trace.records, plan.sigma).map_err(|e| e.to_string())?;
        ensure(check.holds(), || format!("run {run} ({kind}) fails: {check:?}"))?;
        terms += trace.records.len();
    }
    Ok(format!("50 runs, {terms} terms, no violation"))
}

fn regret_bounds() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let text = base_config(
        "ucb",
        100,
        1,
        "schedule.delta = 0.1\nacq.theta_mode = schedule_min\nsweep.algorithms = ucb, vei\nsweep.seeds = 1..=100\n",
    );
    let plan = Plan::parse(&text).map_err(|e| e.to_string())?;
    let jobs = std::thread::available_parallelism().map_or(1, |n| n.get());
    let agg = run_sweep(&plan, dir.path(), false, jobs).map_err(|e| e.to_string())?;
    let limit = 0.9 - 3.0 * (0.1f64 * 0.9 / 100.0).sqrt();
    let mut parts = Vec::new();
    for algo in ["ucb", "vei"] {
        let stats = &agg.algorithms[algo];
        let rate = stats.bound_satisfied_rate.ok_or("no bound recorded")?;
        ensure(stats.cells == 100 && stats.failed == 0, || format!("{algo}: {} failed", stats.failed))?;
        ensure(rate >= limit, || format!("{algo}: satisfied fraction {rate} < {limit:.3}"))?;
        parts.push(format!("{algo} {rate:.2}"));
    }
    Ok(format!("satisfied fractions {} >= {limit:.3}", parts.join(", ")))
}

fn no_regret_trend() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let text = "kernel.family = se\nkernel.lengthscale = 0.5\ndomain.d = 2\ndomain.r = 1\n\
                schedule.sigma = 0.01\ngrid.cap = 441\nts.joint_cap = 441\n\
                objective.kind = benchmark\nobjective.name = quadratic_bowl\n\
                acq.kind = ucb\nacq.theta_mode = schedule_min\nrun.T = 200\nrun.seed = 1\n\
                sweep.algorithms = ucb, ts, vei\nsweep.seeds = 1..=20\n";
    let plan = Plan::parse(text).map_err(|e| e.to_string())?;
    let jobs = std::thread::available_parallelism().map_or(1, |n| n.get());
    run_sweep(&plan, dir.path(), false, jobs).map_err(|e| e.to_string())?;
    let mut parts = Vec::new();
    let mut failed = Vec::new();
    for algo in ["ucb", "ts", "vei"] {
        let mut early = Vec::new();
        let mut late = Vec::new();
        for seed in 1..=20 {
            let recs = read_trace_file(&dir.path().join(format!("{algo}_{seed}_200.csv"))).map_err(|e| e.to_string())?;
            early.push(recs[49].r_cum / 50.0);
            late.push(recs[199].r_cum / 200.0);
        }
        let ratio = median(&late) / median(&early);
        parts.push(format!("{algo} {ratio:.3}"));
        if !(ratio < 0.5) {
            failed.push(algo);
        }
    }
    ensure(failed.is_empty(), || format!("ratio not below 0.5 for {failed:?}: {}", parts.join(", ")))?;
    Ok(format!("median(R_200/200) / median(R_50/50): {}", parts.join(", ")))
}

fn sampler_moments() -> Outcome {
    let n = 100_000;
    let k = KernelSpec::new(KernelFamily::SquaredExponential, 0.2).unwrap();
    let prior = GpState::new(k, 0.1).unwrap();
    let draws: Vec<f64> = (0..n)
        .map(|s| prior.sample_on_set(&[vec![0.5]], 1.0, s as u64).map(|v| v[0]))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let mean = draws.iter().sum::<f64>() / n as f64;
    let var = draws.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    ensure(mean.abs() <= 0.01, || format!("prior mean {mean}"))?;
    ensure((var - 1.0).abs() <= 0.02, || format!("prior variance {var}"))?;

    let k = KernelSpec::new(KernelFamily::Matern52, 0.3).unwrap();
    let gp = GpState::new(k, 0.1).unwrap();
    let pts = vec![vec![0.2], vec![0.35]];
    let nu = 1.5;
    let cov = gp.posterior_covariance(&pts).map_err(|e| e.to_string())?;
    let mut s = [0.0; 2];
    let mut ss = [[0.0; 2]; 2];
    for seed in 0..n {
        let v = gp.sample_on_set(&pts, nu, seed as u64).map_err(|e| e.to_string())?;
        for i in 0..2 {
            s[i] += v[i];
            for j in 0..2 {
                ss[i][j] += v[i] * v[j];
            }
        }
    }
    let mut worst: f64 = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            let emp = ss[i][j] / n as f64 - s[i] * s[j] / (n as f64 * n as f64);
            worst = worst.max((emp - nu * cov[i * 2 + j]).abs());
        }
    }
    ensure(worst <= 0.02, || format!("pair covariance error {worst}"))?;
    Ok(format!("10^5 draws: mean {mean:.4}, variance {var:.4}, pair covariance error {worst:.4}"))
}

fn constants_example() -> Outcome {
    let rep = check_ei_constants(ConvergenceConstants::from_c3(100.0, 100.0, 2.0, 1.0, 1.0), 10_000)
        .map_err(|e| e.to_string())?;
    ensure(rep.a_proof.ok && rep.b.ok && rep.c.ok && rep.d.ok && rep.all_ok_proof, || {
        format!("conditions fail: {rep:?}")
    })?;
    let expected = 1.0 - (std::f64::consts::PI / 2.0).sqrt() * norm_pdf(2.0);
    ensure((rep.probability - expected).abs() <= 1e-12, || format!("probability {}", rep.probability))?;
    ensure(format!("{:.3}", rep.probability) == "0.932", || format!("probability {}", rep.probability))?;
    Ok(format!(
        "(a proof form)-(d) hold, (a) as stated {}, probability {:.5}",
        if rep.a_statement.ok { "holds" } else { "fails" },
        rep.probability
    ))
}

fn cover_fuzz() -> Outcome {
    let mut rng = from_seed(109);
    let mut worst: f64 = 0.0;
    let mut largest = 0usize;
    for d in 1..=3 {
        for t in 1..=20 {
            let r = 0.5 + 2.5 * uniform(&mut rng);
            let l = 0.5 + 2.5 * uniform(&mut rng);
            let dom = BoxDomain::new(d, r, l).map_err(|e| e.to_string())?;
            let disc = dom.lattice(t, usize::MAX).map_err(|e| e.to_string())?;
            ensure(!disc.capped, || format!("d={d} t={t} capped"))?;
            largest = largest.max(disc.len());
            for _ in 0..10_000 {
                let x = points(&mut rng, 1, d, r).pop().unwrap();
                let (_, p) = disc.closest(&x).map_err(|e| e.to_string())?;
                let dist = p.iter().zip(&x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                worst = worst.max(dist / disc.h);
                ensure(dist <= disc.h, || format!("d={d} t={t}: distance {dist} > h {}", disc.h))?;
            }
        }
    }
    Ok(format!("60 (d, t) pairs x 10^4 points, max distance/h {worst:.3}, largest lattice {largest}"))
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let bin = env!("CARGO_BIN_EXE_bo");
    let mut compared = 0;
    for (i, kind) in ["ucb", "ts", "ei", "vei"].iter().enumerate() {
        let cfg = dir.path().join(format!("{kind}.cfg"));
        let text = format!(
            "kernel.family = matern52\ndomain.d = 2\ndomain.r = 1.5\nacq.kind = {kind}\nacq.theta = 0.5\n\
             grid.cap = 400\nrun.T = 25\nrun.seed = {}\nobjective.kind = gp\nobjective.lattice = 12\n",
            40 + i
        );
        std::fs::write(&cfg, text).map_err(|e| e.to_string())?;
        let mut outputs = Vec::new();
        for rep in 0..2 {
            let out = dir.path().join(format!("{kind}_{rep}.csv"));
            let status = Command::new(bin)
                .arg("--out")
                .arg(&out)
                .args(["run", "--config"])
                .arg(&cfg)
                .status()
                .map_err(|e| e.to_string())?;
            ensure(status.success(), || format!("{kind}: exit {status}"))?;
            outputs.push(std::fs::read(&out).map_err(|e| e.to_string())?);
        }
        ensure(outputs[0] == outputs[1], || format!("{kind}: trace bytes differ"))?;
        compared += 1;
    }

    let cfg = dir.path().join("sweep.cfg");
    std::fs::write(
        &cfg,
        base_config("ucb", 30, 1, "acq.theta = 1\ngrid.cap = 441\nts.joint_cap = 441\nsweep.algorithms = ucb, ts, ei, vei\nsweep.seeds = 1..=3\n"),
    )
    .map_err(|e| e.to_string())?;
    for jobs in ["1", "3"] {
        let status = Command::new(bin)
            .arg("--out")
            .arg(dir.path().join(format!("jobs{jobs}")))
            .args(["--jobs", jobs, "sweep", "--config"])
            .arg(&cfg)
            .status()
            .map_err(|e| e.to_string())?;
        ensure(status.success(), || format!("sweep --jobs {jobs}: exit {status}"))?;
    }
    for kind in ["ucb", "ts", "ei", "vei"] {
        for seed in 1..=3 {
            let name = format!("{kind}_{seed}_30.csv");
            let read = |sub: &str| std::fs::read(dir.path().join(sub).join(&name));
            let (a, b) = (read("jobs1").map_err(|e| e.to_string())?, read("jobs3").map_err(|e| e.to_string())?);
            ensure(a == b, || format!("{name} differs between --jobs 1 and --jobs 3"))?;
            compared += 1;
        }
    }
    Ok(format!("{compared} trace pairs byte-identical (reruns and --jobs 1 vs 3)"))
}

struct Criterion {
    id: u32,
    name: &'static str,
    budget: Option<Duration>,
    check: fn() -> Outcome,
}

fn main() -> ExitCode {
    let criteria = [
        Criterion { id: 1, name: "noise-weight inequality", budget: Some(Duration::from_secs(10)), check: noise_weights },
        Criterion { id: 2, name: "pointwise prediction-error coverage", budget: Some(Duration::from_secs(120)), check: coverage },
        Criterion { id: 3, name: "EI identities and sandwich", budget: Some(Duration::from_secs(5)), check: ei_identities },
        Criterion { id: 4, name: "variance-sum inequality", budget: Some(Duration::from_secs(30)), check: variance_sum },
        Criterion { id: 5, name: "UCB and VEI regret bounds", budget: Some(Duration::from_secs(600)), check: regret_bounds },
        Criterion { id: 6, name: "no-regret trend", budget: None, check: no_regret_trend },
        Criterion { id: 7, name: "joint sampler moments", budget: Some(Duration::from_secs(60)), check: sampler_moments },
        Criterion { id: 8, name: "EI constants example", budget: None, check: constants_example },
        Criterion { id: 9, name: "discretization cover", budget: Some(Duration::from_secs(10)), check: cover_fuzz },
        Criterion { id: 10, name: "determinism", budget: None, check: determinism },
    ];
    let only: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failures = 0;
    for c in criteria.iter().filter(|c| only.is_empty() || only.contains(&c.id)) {
        let start = Instant::now();
        let result = (c.check)();
        let took = start.elapsed();
        let over = c.budget.filter(|b| took > *b);
        let (status, detail) = match (&result, over) {
            (Ok(msg), None) => ("PASS", msg.clone()),
            (Ok(msg), Some(b)) => ("FAIL", format!("{msg}; took longer than {}s", b.as_secs())),
            (Err(msg), _) => ("FAIL", msg.clone()),
        };
        if status == "FAIL" {
            failures += 1;
        }
        println!("{status} criterion {:>2} {}: {detail} [{:.1}s]", c.id, c.name, took.as_secs_f64());
    }
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failures} criteria failed");
        ExitCode::FAILURE
    }
}
