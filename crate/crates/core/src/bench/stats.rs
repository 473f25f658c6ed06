//! Aggregate statistics over run traces: expected running time (ERT),
//! empirical runtime distributions (ECDF), and ERT loss ratios against a
//! reference.
//!
//! All aggregation iterates in a deterministic order (sorted cells, reps in
//! ascending order), so recomputing from the same traces reproduces results
//! bitwise.

use std::collections::{BTreeMap, BTreeSet};

use crate::bench::RunTrace;
use crate::error::{Error, Result};

/// Precision targets from 1e2 down to 1e-8, one per decade (11 values,
/// descending). Gap `g` meets target `tau` when `g <= tau`.
pub fn default_target_ladder() -> Vec<f64> {
    (-8..=2).rev().map(|e| 10f64.powi(e)).collect()
}

/// Budget checkpoints for loss-ratio tables, in evaluations per dimension.
pub const FE_GRID: [u64; 5] = [2, 10, 100, 1_000, 10_000];

/// Label of the loss-ratio row that reports unsuccessful-run lengths
/// (evaluations per dimension of runs that never reached the final target).
pub const UNSUCCESSFUL_ROW_LABEL: &str = "RL_US/D";

/// Expected running time for one (variant, function, dim) cell at one target.
#[derive(Debug, Clone, PartialEq)]
pub struct ErtEstimate {
    pub target: f64,
    /// Runs that reached the target.
    pub successes: u32,
    /// Evaluations summed over all runs: first-hit cost for successes, the
    /// full consumed budget for failures.
    pub total_evals: u64,
    /// `total_evals / successes`; infinite when nothing succeeded.
    pub ert: f64,
}

/// ERT over a cell of runs. Errors on an empty cell.
pub fn compute_ert<'a, I>(traces: I, target: f64) -> Result<ErtEstimate>
where
    I: IntoIterator<Item = &'a RunTrace>,
{
    let mut successes = 0u32;
    let mut total_evals = 0u64;
    let mut seen = false;
    for t in traces {
        seen = true;
        match t.first_hit(target) {
            Some(evals) => {
                successes += 1;
                total_evals += evals;
            }
            None => total_evals += t.consumed(),
        }
    }
    if !seen {
        return Err(Error::EmptyCell);
    }
    let ert = if successes > 0 {
        total_evals as f64 / successes as f64
    } else {
        f64::INFINITY
    };
    Ok(ErtEstimate {
        target,
        successes,
        total_evals,
        ert,
    })
}

/// One point of an empirical runtime distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct EcdfPoint {
    /// Budget checkpoint in evaluations per dimension.
    pub budget_per_dim: f64,
    /// Fraction of (run, target) pairs solved within that budget.
    pub proportion: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EcdfCurve {
    pub points: Vec<EcdfPoint>,
}

/// Empirical runtime distribution over all (run, target) pairs. Pairs that
/// never reach their target keep the proportion below 1 at every budget.
pub fn compute_ecdf(traces: &[&RunTrace], targets: &[f64], budget_grid: &[f64]) -> EcdfCurve {
    let total = traces.len() * targets.len();
    let mut hit_ratios: Vec<f64> = Vec::new();
    for t in traces {
        for &target in targets {
            if let Some(evals) = t.first_hit(target) {
                hit_ratios.push(evals as f64 / t.dim as f64);
            }
        }
    }
    let points = budget_grid
        .iter()
        .map(|&b| {
            let count = hit_ratios.iter().filter(|&&h| h <= b).count();
            let proportion = if total == 0 {
                0.0
            } else {
                count as f64 / total as f64
            };
            EcdfPoint {
                budget_per_dim: b,
                proportion,
            }
        })
        .collect();
    EcdfCurve { points }
}

/// Quarter-decade budget grid `10^(k/4)` covering every trace's consumed
/// evaluations per dimension.
pub fn default_budget_grid(traces: &[RunTrace]) -> Vec<f64> {
    let max_ratio = traces
        .iter()
        .map(|t| t.consumed() as f64 / t.dim as f64)
        .fold(1.0f64, f64::max);
    let k_max = (4.0 * max_ratio.log10()).ceil().max(0.0) as i64;
    (0..=k_max).map(|k| 10f64.powf(k as f64 / 4.0)).collect()
}

/// Quantile with linear interpolation between order statistics. The input
/// must be sorted ascending; infinities are legal and propagate (never NaN).
/// Returns NaN only for an empty slice.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = pos - lo as f64;
    if frac == 0.0 || sorted[lo] == sorted[hi] {
        sorted[lo]
    } else if sorted[hi].is_infinite() {
        sorted[hi]
    } else {
        sorted[lo] + frac * (sorted[hi] - sorted[lo])
    }
}

/// Reference ERTs keyed by (function_id, dim, target index in the ladder).
pub type ErtTable = BTreeMap<(String, usize, usize), f64>;

/// Per-cell best finite ERT across the variants present in `traces`. Cells
/// where no variant ever succeeded get no entry.
pub fn best_reference_table(traces: &[RunTrace], ladder: &[f64]) -> ErtTable {
    let mut cells: BTreeMap<(String, String, usize), Vec<&RunTrace>> = BTreeMap::new();
    for t in traces {
        cells
            .entry((t.variant.clone(), t.function_id.clone(), t.dim))
            .or_default()
            .push(t);
    }
    let mut table = ErtTable::new();
    for ((_, function, dim), cell) in &cells {
        for (tidx, &target) in ladder.iter().enumerate() {
            let est =
                compute_ert(cell.iter().copied(), target).expect("grouped cells are nonempty");
            if est.ert.is_finite() {
                table
                    .entry((function.clone(), *dim, tidx))
                    .and_modify(|best| *best = best.min(est.ert))
                    .or_insert(est.ert);
            }
        }
    }
    table
}

/// One row of the loss-ratio table: quantiles of `ERT / ERT_ref` over the
/// (function, target) pairs whose reference is reachable within the budget.
#[derive(Debug, Clone, PartialEq)]
pub struct LossRatioRow {
    pub variant: String,
    pub dim: usize,
    /// Budget label: an entry of [`FE_GRID`] or [`UNSUCCESSFUL_ROW_LABEL`].
    pub fes_label: String,
    pub best: f64,
    pub q10: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub q90: f64,
    /// Number of ratios (or run lengths) behind the quantiles.
    pub covered: usize,
    /// (function, target) pairs dropped because the reference has no entry.
    pub excluded: usize,
}

fn quantile_row(
    variant: &str,
    dim: usize,
    fes_label: String,
    sorted: &[f64],
    excluded: usize,
) -> LossRatioRow {
    LossRatioRow {
        variant: variant.to_string(),
        dim,
        fes_label,
        best: quantile(sorted, 0.0),
        q10: quantile(sorted, 0.10),
        q25: quantile(sorted, 0.25),
        median: quantile(sorted, 0.50),
        q75: quantile(sorted, 0.75),
        q90: quantile(sorted, 0.90),
        covered: sorted.len(),
        excluded,
    }
}

/// ERT loss ratios per (variant, dim) and budget checkpoint, plus one
/// closing row per (variant, dim) with the lengths of unsuccessful runs.
///
/// At checkpoint `fes` only (function, target) pairs whose reference ERT is
/// finite and at most `fes * dim` enter the quantiles; an algorithm's own
/// infinite ERT over such a pair stays in as an infinite ratio.
pub fn compute_loss_ratios(
    traces: &[RunTrace],
    reference: Option<&ErtTable>,
    ladder: &[f64],
) -> Vec<LossRatioRow> {
    let own_reference;
    let reference = match reference {
        Some(r) => r,
        None => {
            own_reference = best_reference_table(traces, ladder);
            &own_reference
        }
    };
    let mut groups: BTreeMap<(String, usize), Vec<&RunTrace>> = BTreeMap::new();
    for t in traces {
        groups
            .entry((t.variant.clone(), t.dim))
            .or_default()
            .push(t);
    }
    let mut rows = Vec::new();
    for ((variant, dim), group) in &groups {
        let functions: BTreeSet<&str> = group.iter().map(|t| t.function_id.as_str()).collect();
        let mut own_ert: BTreeMap<(&str, usize), f64> = BTreeMap::new();
        for &function in &functions {
            let cell: Vec<&RunTrace> = group
                .iter()
                .filter(|t| t.function_id == function)
                .copied()
                .collect();
            for (tidx, &target) in ladder.iter().enumerate() {
                let est =
                    compute_ert(cell.iter().copied(), target).expect("grouped cells are nonempty");
                own_ert.insert((function, tidx), est.ert);
            }
        }
        for &fes in &FE_GRID {
            let cap = (fes * *dim as u64) as f64;
            let mut ratios = Vec::new();
            let mut excluded = 0usize;
            for &function in &functions {
                for tidx in 0..ladder.len() {
                    match reference.get(&(function.to_string(), *dim, tidx)) {
                        None => excluded += 1,
                        Some(&re) if re <= cap => ratios.push(own_ert[&(function, tidx)] / re),
                        Some(_) => {}
                    }
                }
            }
            ratios.sort_by(f64::total_cmp);
            rows.push(quantile_row(
                variant,
                *dim,
                fes.to_string(),
                &ratios,
                excluded,
            ));
        }
        let final_target = *ladder.last().expect("target ladder is nonempty");
        let mut lengths: Vec<f64> = group
            .iter()
            .filter(|t| t.first_hit(final_target).is_none())
            .map(|t| t.consumed() as f64 / t.dim as f64)
            .collect();
        lengths.sort_by(f64::total_cmp);
        rows.push(quantile_row(
            variant,
            *dim,
            UNSUCCESSFUL_ROW_LABEL.to_string(),
            &lengths,
            0,
        ));
    }
    rows
}

/// One row of `ert.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct ErtRow {
    pub variant: String,
    pub function_id: String,
    pub dim: usize,
    pub target: f64,
    pub successes: u32,
    pub total_evals: u64,
    pub ert: f64,
}

/// One row of `ecdf.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct EcdfRow {
    pub variant: String,
    pub dim: usize,
    pub budget_per_dim: f64,
    pub proportion: f64,
}

/// One row of `mean_traces.csv`: average best-so-far gap across reps.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanTraceRow {
    pub variant: String,
    pub function_id: String,
    pub dim: usize,
    pub evals: u64,
    pub mean_gap: f64,
}

/// Everything the report writers need, derived from the traces alone.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StatsBundle {
    pub ert_rows: Vec<ErtRow>,
    pub ecdf_rows: Vec<EcdfRow>,
    pub loss_rows: Vec<LossRatioRow>,
    pub mean_rows: Vec<MeanTraceRow>,
}

/// Best-so-far gap of one run after `evals` evaluations; infinite before the
/// first checkpoint.
fn gap_at(t: &RunTrace, evals: u64) -> f64 {
    t.points
        .iter()
        .take_while(|p| p.evals <= evals)
        .last()
        .map(|p| p.gap)
        .unwrap_or(f64::INFINITY)
}

fn mean_trace_rows(traces: &[RunTrace]) -> Vec<MeanTraceRow> {
    let mut cells: BTreeMap<(String, String, usize), Vec<&RunTrace>> = BTreeMap::new();
    for t in traces {
        cells
            .entry((t.variant.clone(), t.function_id.clone(), t.dim))
            .or_default()
            .push(t);
    }
    let mut rows = Vec::new();
    for ((variant, function, dim), cell) in &cells {
        let max_consumed = cell.iter().map(|t| t.consumed()).max().unwrap_or(0);
        if max_consumed == 0 {
            continue;
        }
        let mut checkpoints: Vec<u64> = (1..=100u64)
            .map(|j| (max_consumed * j).div_ceil(100))
            .collect();
        checkpoints.dedup();
        for e in checkpoints {
            let sum: f64 = cell.iter().map(|t| gap_at(t, e)).sum();
            rows.push(MeanTraceRow {
                variant: variant.clone(),
                function_id: function.clone(),
                dim: *dim,
                evals: e,
                mean_gap: sum / cell.len() as f64,
            });
        }
    }
    rows
}

/// Derives the full statistics bundle. `reference` supplies external
/// reference ERTs for the loss ratios; without it the per-cell best variant
/// in `traces` is the reference.
pub fn compute_stats(traces: &[RunTrace], reference: Option<&ErtTable>) -> StatsBundle {
    let ladder = default_target_ladder();
    let mut cells: BTreeMap<(String, String, usize), Vec<&RunTrace>> = BTreeMap::new();
    for t in traces {
        cells
            .entry((t.variant.clone(), t.function_id.clone(), t.dim))
            .or_default()
            .push(t);
    }
    let mut ert_rows = Vec::new();
    for ((variant, function, dim), cell) in &cells {
        for &target in &ladder {
            let est =
                compute_ert(cell.iter().copied(), target).expect("grouped cells are nonempty");
            ert_rows.push(ErtRow {
                variant: variant.clone(),
                function_id: function.clone(),
                dim: *dim,
                target,
                successes: est.successes,
                total_evals: est.total_evals,
                ert: est.ert,
            });
        }
    }
    let grid = default_budget_grid(traces);
    let mut ecdf_groups: BTreeMap<(String, usize), Vec<&RunTrace>> = BTreeMap::new();
    for t in traces {
        ecdf_groups
            .entry((t.variant.clone(), t.dim))
            .or_default()
            .push(t);
    }
    let mut ecdf_rows = Vec::new();
    for ((variant, dim), group) in &ecdf_groups {
        let curve = compute_ecdf(group, &ladder, &grid);
        for p in curve.points {
            ecdf_rows.push(EcdfRow {
                variant: variant.clone(),
                dim: *dim,
                budget_per_dim: p.budget_per_dim,
                proportion: p.proportion,
            });
        }
    }
    let loss_rows = compute_loss_ratios(traces, reference, &ladder);
    let mean_rows = mean_trace_rows(traces);
    StatsBundle {
        ert_rows,
        ecdf_rows,
        loss_rows,
        mean_rows,
    }
}
