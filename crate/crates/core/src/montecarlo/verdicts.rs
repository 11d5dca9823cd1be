use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, LevelMode};
use super::harness::{run_experiment, SimulationReport};
use super::stats::Interval;
use crate::error::{invalid, Result};

/// Mean of `β` over `λ` against `[1 - tol, 1 + tol]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanRatioVerdict {
    pub n: usize,
    pub k: usize,
    pub u: f64,
    pub ratio: f64,
    pub ci: Interval,
    pub tolerance: f64,
    /// `None` when the interval is unbounded (fewer than two replicates).
    pub pass: Option<bool>,
}

/// Default tolerance `3/u² + 3/n`.
pub fn default_mean_tolerance(u: f64, n: usize) -> f64 {
    3.0 / (u * u) + 3.0 / n.max(1) as f64
}

/// Pass when the bootstrap interval of `mean β / λ` meets `[1 - tol, 1 + tol]`.
pub fn mean_ratio_verdict(
    report: &SimulationReport,
    n: usize,
    k: usize,
    tolerance: Option<f64>,
) -> Result<MeanRatioVerdict> {
    let s = report.summary(n, k).ok_or_else(|| invalid(format!("no summary for n = {n}, k = {k}")))?;
    let ratio = s.mean_ratio.ok_or_else(|| invalid(format!("λ is undefined at n = {n}, k = {k}, u = {}", s.u)))?;
    let tolerance = tolerance.unwrap_or_else(|| default_mean_tolerance(s.u, n));
    let pass = s.mean_ratio_ci.is_bounded().then(|| s.mean_ratio_ci.overlaps(1.0 - tolerance, 1.0 + tolerance));
    Ok(MeanRatioVerdict { n, k, u: s.u, ratio, ci: s.mean_ratio_ci, tolerance, pass })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trend {
    Increasing,
    Decreasing,
    Neither,
}

/// Strict direction of `values` in order.
pub fn trend(values: &[f64]) -> Trend {
    let pairs: Vec<(f64, f64)> = values.windows(2).map(|w| (w[0], w[1])).collect();
    if pairs.is_empty() {
        Trend::Neither
    } else if pairs.iter().all(|(a, b)| b > a) {
        Trend::Increasing
    } else if pairs.iter().all(|(a, b)| b < a) {
        Trend::Decreasing
    } else {
        Trend::Neither
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub schedule: String,
    pub n: usize,
    pub k: usize,
    pub u: f64,
    pub lambda: Option<f64>,
    pub p_zero: f64,
    pub p_zero_lo: Option<f64>,
    pub p_zero_hi: Option<f64>,
    pub mean_ratio: Option<f64>,
    pub var_over_lambda_sq: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendVerdict {
    pub schedule: String,
    pub k: usize,
    pub quantity: String,
    pub trend: Trend,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    pub trends: Vec<TrendVerdict>,
    /// The experiment behind each config, in order.
    #[serde(skip)]
    pub reports: Vec<SimulationReport>,
}

/// One experiment per config, tabulated by `(schedule, n)`, with the
/// direction of `P{β = 0}` and `Var β / λ²` along increasing `n`.
pub fn regime_sweep(configs: &[ExperimentConfig], workers: usize) -> Result<SweepTable> {
    let mut rows = Vec::new();
    let mut trends = Vec::new();
    let mut reports = Vec::new();
    for config in configs {
        if !matches!(config.level, LevelMode::Schedule { .. }) {
            return Err(invalid("regime sweeps need a level schedule"));
        }
        let report = run_experiment(config, workers)?;
        let schedule = config.level.label();
        let mut ns = config.ns.clone();
        ns.sort_unstable();
        for &k in &config.ks {
            let cells: Vec<_> = ns.iter().filter_map(|&n| report.summary(n, k)).collect();
            for s in &cells {
                rows.push(SweepRow {
                    schedule: schedule.clone(),
                    n: s.n,
                    k,
                    u: s.u,
                    lambda: s.lambda,
                    p_zero: s.p_zero,
                    p_zero_lo: s.p_zero_ci.lo,
                    p_zero_hi: s.p_zero_ci.hi,
                    mean_ratio: s.mean_ratio,
                    var_over_lambda_sq: s.var_over_lambda_sq,
                });
            }
            let p_zero: Vec<f64> = cells.iter().map(|s| s.p_zero).collect();
            let var: Vec<f64> = cells.iter().map(|s| s.var_over_lambda_sq.unwrap_or(f64::NAN)).collect();
            for (quantity, values) in [("p_zero", p_zero), ("var_over_lambda_sq", var)] {
                trends.push(TrendVerdict {
                    schedule: schedule.clone(),
                    k,
                    quantity: quantity.into(),
                    trend: trend(&values),
                });
            }
        }
        reports.push(report);
    }
    Ok(SweepTable { rows, trends, reports })
}
