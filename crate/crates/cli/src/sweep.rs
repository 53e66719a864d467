//! Replication sweeps: one trace CSV and summary JSON per cell, plus an
//! `aggregate.json` over all cells.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use bo_core::diagnostics::GammaEstimate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{Cell, Plan};
use crate::error::{HarnessError, Result};
use crate::harness::{estimate_gamma, run_single, Summary};
use crate::trace_csv::trace_to_string;

pub const AGGREGATE_FILE: &str = "aggregate.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellFailure {
    pub stem: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmStats {
    pub cells: usize,
    pub failed: usize,
    /// Statistics of the final `r_cum` value, the algorithm's active regret.
    pub mean_regret: f64,
    pub median_regret: f64,
    pub mean_regret_per_step: f64,
    pub median_regret_per_step: f64,
    /// Fraction of cells whose regret bound held; `None` without a bound.
    pub bound_satisfied_rate: Option<f64>,
    pub variance_sum_holds_rate: f64,
    /// Pooled rate of trajectory width violations.
    pub trajectory_violation_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub cells: usize,
    pub failed: usize,
    pub algorithms: BTreeMap<String, AlgorithmStats>,
    pub failures: Vec<CellFailure>,
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        f64::NAN
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    }
}

fn final_regret(s: &Summary) -> f64 {
    match s.regret.active {
        bo_core::RegretDefinition::Standard => s.regret.standard,
        bo_core::RegretDefinition::Asymptotic => s.regret.asymptotic,
        bo_core::RegretDefinition::Improvement => s.regret.improvement,
    }
}

/// Reduces per-cell outcomes, in cell order.
pub fn aggregate(plan: &Plan, results: &[(Cell, std::result::Result<Summary, String>)]) -> Aggregate {
    let mut algorithms = BTreeMap::new();
    let mut failures = Vec::new();
    let mut kinds: Vec<_> = results.iter().map(|(c, _)| c.kind).collect();
    kinds.sort_by_key(|k| k.to_string());
    kinds.dedup();
    for (cell, res) in results {
        if let Err(e) = res {
            failures.push(CellFailure {
                stem: plan.cell_stem(cell),
                error: e.clone(),
            });
        }
    }
    for kind in kinds {
        let mine: Vec<_> = results.iter().filter(|(c, _)| c.kind == kind).collect();
        let ok: Vec<&Summary> = mine.iter().filter_map(|(_, r)| r.as_ref().ok()).collect();
        let regrets: Vec<f64> = ok.iter().map(|s| final_regret(s)).collect();
        let per_step: Vec<f64> = ok.iter().map(|s| final_regret(s) / s.steps.max(1) as f64).collect();
        let with_bound: Vec<bool> = ok.iter().filter_map(|s| s.flags.bound_satisfied).collect();
        let checked: usize = ok.iter().map(|s| s.checks.trajectory.checked).sum();
        let violated: usize = ok.iter().map(|s| s.checks.trajectory.violations).sum();
        algorithms.insert(
            kind.to_string(),
            AlgorithmStats {
                cells: mine.len(),
                failed: mine.len() - ok.len(),
                mean_regret: mean(&regrets),
                median_regret: median(&regrets),
                mean_regret_per_step: mean(&per_step),
                median_regret_per_step: median(&per_step),
                bound_satisfied_rate: if with_bound.is_empty() {
                    None
                } else {
                    Some(with_bound.iter().filter(|&&b| b).count() as f64 / with_bound.len() as f64)
                },
                variance_sum_holds_rate: if ok.is_empty() {
                    f64::NAN
                } else {
                    ok.iter().filter(|s| s.checks.variance_sum.holds()).count() as f64 / ok.len() as f64
                },
                trajectory_violation_rate: if checked == 0 { 0.0 } else { violated as f64 / checked as f64 },
            },
        );
    }
    Aggregate {
        cells: results.len(),
        failed: failures.len(),
        algorithms,
        failures,
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| HarnessError::io(path, e))
}

/// Paths a sweep writes, trace and summary per cell, then the aggregate.
pub fn output_paths(plan: &Plan, dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    for cell in plan.cells() {
        let stem = plan.cell_stem(&cell);
        out.push(dir.join(format!("{stem}.csv")));
        out.push(dir.join(format!("{stem}.json")));
    }
    out.push(dir.join(AGGREGATE_FILE));
    out
}

fn run_cell(plan: &Plan, cell: &Cell, dir: &Path, gamma: &BTreeMap<usize, GammaEstimate>) -> Result<Summary> {
    let cp = plan.cell_plan(cell);
    let stem = plan.cell_stem(cell);
    log::info!("cell {stem}: start");
    let (trace, summary) = run_single(&cp, gamma.get(&cell.horizon))?;
    write_file(&dir.join(format!("{stem}.csv")), &trace_to_string(&trace.records))?;
    let json = serde_json::to_string_pretty(&summary).map_err(|e| HarnessError::format(dir, e))?;
    write_file(&dir.join(format!("{stem}.json")), &json)?;
    log::info!("cell {stem}: R_T = {:.6e}", trace.cumulative_regret());
    Ok(summary)
}

/// Runs every cell on `jobs` threads and writes all artifacts into `dir`.
/// Refuses to touch existing files unless `force` is set. Returns
/// [`HarnessError::CellsFailed`] after writing the aggregate if any cell
/// failed.
pub fn run_sweep(plan: &Plan, dir: &Path, force: bool, jobs: usize) -> Result<Aggregate> {
    if !force {
        if let Some(p) = output_paths(plan, dir).into_iter().find(|p| p.exists()) {
            return Err(HarnessError::Exists(p));
        }
    }
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let cells = plan.cells();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| HarnessError::format(dir, e))?;

    let mut horizons: Vec<usize> = cells.iter().map(|c| c.horizon).collect();
    horizons.sort_unstable();
    horizons.dedup();
    let gamma: BTreeMap<usize, GammaEstimate> = pool.install(|| {
        horizons
            .par_iter()
            .map(|&t| {
                let mut p = plan.clone();
                p.horizon = t;
                estimate_gamma(&p).map(|g| (t, g))
            })
            .collect::<Result<_>>()
    })?;

    let results: Vec<(Cell, std::result::Result<Summary, String>)> = pool.install(|| {
        cells
            .par_iter()
            .map(|cell| {
                let res = run_cell(plan, cell, dir, &gamma).map_err(|e| {
                    log::error!("cell {}: {e}", plan.cell_stem(cell));
                    e.to_string()
                });
                (*cell, res)
            })
            .collect()
    });
    let agg = aggregate(plan, &results);
    let json = serde_json::to_string_pretty(&agg).map_err(|e| HarnessError::format(dir, e))?;
    write_file(&dir.join(AGGREGATE_FILE), &json)?;
    if agg.failed > 0 {
        return Err(HarnessError::CellsFailed {
            failed: agg.failed,
            total: agg.cells,
        });
    }
    Ok(agg)
}
