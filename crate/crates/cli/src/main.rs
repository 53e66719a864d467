use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bo_cli::harness::{estimate_gamma, prepare, regret_curve, summarize, trace_from_records};
use bo_cli::trace_csv::{fmt_f64, read_trace_file, trace_to_string};
use bo_cli::{build_objective, run_single, run_sweep, HarnessError, Plan, Result};
use bo_core::diagnostics::{coverage_replication, gamma_greedy, CoverageKind, CoverageParams, CoverageReport};
use bo_core::schedules::{check_ei_constants, ConvergenceConstants};
use bo_core::{AcquisitionKind, KernelFamily, KernelSpec};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

#[derive(Parser)]
#[command(name = "bo", version, about = "Bayesian optimization runs with regret and bound diagnostics")]
struct Cli {
    /// Overrides `run.seed` (or the coverage seed).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file, or directory for `sweep`. Defaults to stdout where possible.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overwrite existing outputs.
    #[arg(long, global = true)]
    force: bool,
    /// Worker threads for sweeps and coverage studies.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one optimization and write its trace CSV.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Also write the summary JSON here.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Run every cell of the config's sweep axes.
    Sweep {
        #[arg(long)]
        config: PathBuf,
    },
    /// Recompute regret bounds for an existing trace.
    CheckBounds {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        trace: PathBuf,
        /// Overrides `acq.kind`, for traces from a multi-algorithm sweep.
        #[arg(long)]
        algorithm: Option<AcquisitionKind>,
        /// Write `(t, R_t, rhs_t)` rows for plotting.
        #[arg(long)]
        curve: Option<PathBuf>,
    },
    /// Check the conditions on the EI convergence constants.
    CheckConstants {
        #[arg(long, default_value_t = 100.0)]
        c1: f64,
        #[arg(long, default_value_t = 100.0)]
        c3: f64,
        #[arg(long, default_value_t = 2.0)]
        w: f64,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[arg(long, default_value_t = 1.0)]
        beta_sqrt: f64,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
    },
    /// Greedy maximum-information-gain estimate; the series goes to --out.
    EstimateGamma(GammaArgs),
    /// Build the configured objective and save it as JSON.
    GenObjective {
        #[arg(long)]
        config: PathBuf,
    },
    /// Monte-Carlo confidence-bound coverage study.
    Coverage(CoverageArgs),
}

#[derive(Args)]
struct GammaArgs {
    /// Take kernel, domain, noise and horizon from a config file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "se")]
    kernel: KernelFamily,
    #[arg(long, default_value_t = 0.2)]
    lengthscale: f64,
    #[arg(long, default_value_t = 1)]
    d: usize,
    #[arg(long, default_value_t = 1.0)]
    r: f64,
    #[arg(long, default_value_t = 0.1)]
    sigma: f64,
    #[arg(long = "T", default_value_t = 100)]
    horizon: usize,
    #[arg(long, default_value_t = 1024)]
    grid: usize,
}

#[derive(Args)]
struct CoverageArgs {
    #[arg(long, default_value = "pointwise")]
    kind: CoverageKind,
    #[arg(long, default_value_t = 0.2)]
    delta: f64,
    #[arg(long, default_value_t = 500)]
    n: usize,
    #[arg(long, default_value = "se")]
    kernel: KernelFamily,
    #[arg(long, default_value_t = 0.2)]
    lengthscale: f64,
    #[arg(long, default_value_t = 1)]
    d: usize,
    #[arg(long = "B", default_value_t = 1.0)]
    b: f64,
    #[arg(long, default_value_t = 0.1)]
    sigma: f64,
    #[arg(long)]
    sigma_eps: Option<f64>,
    #[arg(long, default_value_t = 10)]
    centers: usize,
    #[arg(long, default_value_t = 20)]
    max_obs: usize,
}

fn init_logging() {
    let level = std::env::var("BO_REGRET_LOG").unwrap_or_else(|_| "error".into());
    let filter = match level.as_str() {
        "error" | "info" | "debug" => level.as_str(),
        other => {
            eprintln!("BO_REGRET_LOG=`{other}` is not one of error, info, debug; using error");
            "error"
        }
    };
    env_logger::Builder::new().parse_filters(filter).init();
}

fn guard(path: &Path, force: bool) -> Result<()> {
    if !force && path.exists() {
        Err(HarnessError::Exists(path.to_path_buf()))
    } else {
        Ok(())
    }
}

fn write_out(path: Option<&Path>, force: bool, contents: &str) -> Result<()> {
    match path {
        Some(p) => {
            guard(p, force)?;
            std::fs::write(p, contents).map_err(|e| HarnessError::Io {
                path: p.to_path_buf(),
                source: e,
            })
        }
        None => std::io::stdout()
            .write_all(contents.as_bytes())
            .map_err(|e| HarnessError::Io {
                path: PathBuf::from("<stdout>"),
                source: e,
            }),
    }
}

fn to_json<T: serde::Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn load_plan(path: &Path, seed: Option<u64>) -> Result<Plan> {
    let overrides: Vec<(&str, String)> = seed.map(|s| ("run.seed", s.to_string())).into_iter().collect();
    Plan::from_path(path, &overrides)
}

fn execute(cli: Cli) -> Result<()> {
    let out = cli.out.as_deref();
    match cli.command {
        Command::Run { config, json } => {
            let plan = load_plan(&config, cli.seed)?;
            if let Some(p) = out {
                guard(p, cli.force)?;
            }
            if let Some(p) = &json {
                guard(p, cli.force)?;
            }
            let (trace, summary) = run_single(&plan, None)?;
            log::info!("R_T = {:.6e}, y+ = {:.6e}", trace.cumulative_regret(), trace.final_incumbent());
            write_out(out, cli.force, &trace_to_string(&trace.records))?;
            if let Some(p) = &json {
                write_out(Some(p), cli.force, &to_json(&summary))?;
            }
        }
        Command::Sweep { config } => {
            let plan = load_plan(&config, cli.seed)?;
            let dir = out
                .map(Path::to_path_buf)
                .or_else(|| plan.out_dir.clone())
                .ok_or_else(|| HarnessError::Config {
                    key: "out.dir".into(),
                    message: "sweep needs --out or out.dir".into(),
                })?;
            let agg = run_sweep(&plan, &dir, cli.force, cli.jobs)?;
            eprintln!("{} cells written to {}", agg.cells, dir.display());
        }
        Command::CheckBounds {
            config,
            trace,
            algorithm,
            curve,
        } => {
            let mut overrides: Vec<(&str, String)> = Vec::new();
            if let Some(s) = cli.seed {
                overrides.push(("run.seed", s.to_string()));
            }
            if let Some(a) = algorithm {
                overrides.push(("acq.kind", a.to_string()));
            }
            let plan = Plan::from_path(&config, &overrides)?;
            let prep = prepare(&plan)?;
            let records = read_trace_file(&trace)?;
            let trace = trace_from_records(&prep, records);
            let gamma = estimate_gamma(&Plan {
                horizon: plan.horizon.max(trace.records.len()),
                ..plan.clone()
            })?;
            let summary = summarize(&plan, &prep, &trace, &gamma)?;
            if let Some(path) = curve {
                let mut s = String::from("t,regret,rhs\n");
                for (t, lhs, rhs) in regret_curve(&plan, &prep, &trace, &gamma)? {
                    s.push_str(&format!("{t},{},{}\n", fmt_f64(lhs), rhs.map(fmt_f64).unwrap_or_default()));
                }
                write_out(Some(&path), cli.force, &s)?;
            }
            write_out(out, cli.force, &to_json(&summary))?;
        }
        Command::CheckConstants {
            c1,
            c3,
            w,
            alpha,
            beta_sqrt,
            samples,
        } => {
            let report = check_ei_constants(ConvergenceConstants::from_c3(c1, c3, w, alpha, beta_sqrt), samples)?;
            write_out(out, cli.force, &to_json(&report))?;
        }
        Command::EstimateGamma(args) => {
            let est = match &args.config {
                Some(path) => estimate_gamma(&load_plan(path, cli.seed)?)?,
                None => {
                    let kernel = KernelSpec::new(args.kernel, args.lengthscale)?;
                    gamma_greedy(&kernel, args.d, args.r, args.sigma, args.horizon, args.grid.max(args.horizon))?
                }
            };
            println!("{}", fmt_f64(est.gamma));
            if let Some(p) = out {
                let mut s = String::from("t,gamma_hat\n");
                for (i, g) in est.series.iter().enumerate() {
                    s.push_str(&format!("{},{}\n", i + 1, fmt_f64(*g)));
                }
                write_out(Some(p), cli.force, &s)?;
            }
        }
        Command::GenObjective { config } => {
            let plan = load_plan(&config, cli.seed)?;
            let spec = build_objective(&plan)?;
            let path = out.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("fn.json"));
            write_out(Some(&path), cli.force, &to_json(&spec))?;
        }
        Command::Coverage(args) => {
            let kernel = KernelSpec::new(args.kernel, args.lengthscale)?;
            let mut p = CoverageParams::new(args.kind, kernel, args.delta, args.n, cli.seed.unwrap_or(0));
            p.d = args.d;
            p.b = args.b;
            p.sigma = args.sigma;
            p.sigma_eps = args.sigma_eps.unwrap_or(args.sigma);
            p.centers = args.centers;
            p.max_obs = args.max_obs;
            if p.replications < 100 {
                return Err(HarnessError::Config {
                    key: "n".into(),
                    message: "coverage studies need at least 100 replications".into(),
                });
            }
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(cli.jobs.max(1))
                .build()
                .expect("thread pool");
            let outcomes = pool.install(|| {
                (0..p.replications)
                    .into_par_iter()
                    .map(|i| coverage_replication(&p, i))
                    .collect::<std::result::Result<Vec<_>, _>>()
            })?;
            let report = CoverageReport::from_outcomes(&p, &outcomes);
            write_out(out, cli.force, &to_json(&report))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_logging();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
