use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, LevelMode};
use super::harness::{run_experiment, SimulationReport};
use super::stats::normal_sf;
use crate::complex::{build_complex, check_distant_vertices, WITNESS_SEARCH_CAP};
use crate::error::{invalid, Error, Result};
use crate::field::{derive_seed, CovarianceModel, FieldSampler};
use crate::patterns::{build_catalog, catalog_violations, Family, SearchCaps, MAX_CATALOG_D, MAX_CATALOG_K};
use crate::theory::{lambda, make_params};

/// Property suites runnable from the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    /// Every inequality between `β_k` and its approximators, per replicate.
    Sandwich,
    /// Mutually distant vertices in every component carrying homology.
    Witness,
    /// Structural facts of the pattern catalogs.
    Catalog,
    /// `E[S_{n,0}] / λ` against `[1 - 1/u², 1]` for independent fields.
    Mills,
}

impl Suite {
    pub const ALL: [Suite; 4] = [Suite::Catalog, Suite::Mills, Suite::Sandwich, Suite::Witness];

    pub fn parse(s: &str) -> Result<Vec<Suite>> {
        Ok(match s {
            "sandwich" => vec![Suite::Sandwich],
            "witness" => vec![Suite::Witness],
            "catalog" => vec![Suite::Catalog],
            "mills" => vec![Suite::Mills],
            "all" => Suite::ALL.to_vec(),
            _ => {
                return Err(invalid(format!("unknown suite `{s}`; expected sandwich, witness, catalog, mills or all")))
            }
        })
    }
}

/// Field and level settings shared by the sampled suites.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteOptions {
    pub model: CovarianceModel,
    pub n: usize,
    pub levels: Vec<f64>,
    pub replicates: u64,
    pub seed: u64,
    pub caps: SearchCaps,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteOutcome {
    pub suite: Suite,
    pub passed: bool,
    pub lines: Vec<String>,
    /// One experiment per level for the sandwich suite.
    #[serde(skip)]
    pub reports: Vec<SimulationReport>,
}

fn outcome(suite: Suite, lines: Vec<(bool, String)>, reports: Vec<SimulationReport>) -> SuiteOutcome {
    let passed = lines.iter().all(|(ok, _)| *ok);
    let lines = lines.into_iter().map(|(ok, l)| format!("{} {l}", if ok { "PASS" } else { "FAIL" })).collect();
    SuiteOutcome { suite, passed, lines, reports }
}

fn sandwich(opts: &SuiteOptions, workers: usize) -> Result<SuiteOutcome> {
    let d = opts.model.d;
    let mut lines = Vec::new();
    let mut reports = Vec::new();
    for &u in &opts.levels {
        let mut config = ExperimentConfig::new(
            opts.model.clone(),
            (0..d).collect(),
            vec![opts.n],
            LevelMode::Fixed { u },
            opts.replicates,
            opts.seed,
        );
        config.caps = opts.caps;
        config.override_assumptions = true;
        config.bootstrap_resamples = 0;
        let report = run_experiment(&config, workers)?;
        for k in 0..d {
            let rows: Vec<_> = report.rows_for(opts.n, k).collect();
            let failed = rows.iter().filter(|r| r.failed()).count();
            let violated = rows.iter().filter(|r| r.sandwich_ok == Some(false)).count();
            let first =
                rows.iter().find(|r| r.failed()).map(|r| format!("; first error: {}", r.error)).unwrap_or_default();
            lines.push((
                failed == 0 && violated == 0,
                format!(
                    "sandwich u = {u} k = {k}: {} replicates, {violated} violated, {failed} not evaluated{first}",
                    rows.len()
                ),
            ));
        }
        reports.push(report);
    }
    Ok(outcome(Suite::Sandwich, lines, reports))
}

fn witness(opts: &SuiteOptions, workers: usize) -> Result<SuiteOutcome> {
    let d = opts.model.d;
    let sampler = FieldSampler::new(&opts.model, opts.n)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidParameter(format!("worker pool: {e}")))?;
    let mut lines = Vec::new();
    for &u in &opts.levels {
        // (checked, skipped over cap, missing) per degree
        let per: Vec<Result<Vec<(usize, usize, usize)>>> = pool.install(|| {
            (0..opts.replicates)
                .into_par_iter()
                .map(|r| {
                    let sample = sampler.sample(derive_seed(opts.seed, r));
                    let complex = build_complex(&sample.excursion_vertices(u), d)?;
                    (0..d)
                        .map(|k| {
                            let w = check_distant_vertices(&complex, k, WITNESS_SEARCH_CAP)?;
                            Ok((w.components_checked, w.skipped_over_cap, w.missing))
                        })
                        .collect()
                })
                .collect()
        });
        let per: Vec<Vec<(usize, usize, usize)>> = per.into_iter().collect::<Result<_>>()?;
        for k in 0..d {
            let (c, s, m) = per.iter().fold((0, 0, 0), |a, v| (a.0 + v[k].0, a.1 + v[k].1, a.2 + v[k].2));
            lines.push((m == 0, format!("witness u = {u} k = {k}: {c} checked, {m} missing, {s} over the search cap")));
        }
    }
    Ok(outcome(Suite::Witness, lines, Vec::new()))
}

fn catalog() -> Result<SuiteOutcome> {
    let mut lines = Vec::new();
    for d in 1..=MAX_CATALOG_D {
        for k in 0..d.min(MAX_CATALOG_K + 1) {
            for family in [Family::N, Family::P] {
                let cat = build_catalog(d, k, family)?;
                let v = catalog_violations(&cat);
                lines.push((
                    v.is_empty(),
                    format!(
                        "catalog d = {d} k = {k} {family:?}: {} patterns, {} violations",
                        cat.patterns.len(),
                        v.len()
                    ),
                ));
            }
        }
        if d >= 2 {
            let top = build_catalog(d, d - 1, Family::N)?;
            lines.push((
                top.patterns.is_empty(),
                format!("catalog d = {d}: N_(d-1) has {} patterns", top.patterns.len()),
            ));
        }
    }
    let p0 = build_catalog(1, 0, Family::P)?;
    lines.push((p0.patterns.len() == 2, format!("catalog d = 1: P_0 has {} patterns", p0.patterns.len())));
    Ok(outcome(Suite::Catalog, lines, Vec::new()))
}

/// Slack on the ends of `[1 - 1/u², 1]`.
const MILLS_TOLERANCE: f64 = 1e-12;

fn mills(opts: &SuiteOptions) -> Result<SuiteOutcome> {
    let d = opts.model.d;
    let params = make_params(d, 0, 0.0, 0.0, 0.0)?;
    let sites = ((2 * opts.n + 1) as f64).powi(d as i32);
    let lines = [3.0, 4.0, 5.0, 6.0]
        .iter()
        .map(|&u| {
            let ratio = sites * normal_sf(u) / lambda(&params, opts.n, u)?;
            let lo = 1.0 - 1.0 / (u * u);
            Ok((
                ratio >= lo - MILLS_TOLERANCE && ratio <= 1.0 + MILLS_TOLERANCE,
                format!("mills u = {u}: E[S]/lambda = {ratio} in [{lo}, 1]"),
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(outcome(Suite::Mills, lines, Vec::new()))
}

pub fn run_suite(suite: Suite, opts: &SuiteOptions, workers: usize) -> Result<SuiteOutcome> {
    match suite {
        Suite::Sandwich => sandwich(opts, workers),
        Suite::Witness => witness(opts, workers),
        Suite::Catalog => catalog(),
        Suite::Mills => mills(opts),
    }
}
