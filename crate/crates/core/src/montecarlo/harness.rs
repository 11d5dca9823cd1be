use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{CltWindow, ExperimentConfig};
use super::stats::{bootstrap_ci, clt_statistics, mean, normal_sf, tv_to_poisson, variance, wilson_interval, Interval};
use crate::complex::{betti, build_complex};
use crate::error::{Error, Result};
use crate::field::{derive_seed, FieldSample, FieldSampler};
use crate::lattice::binomial;
use crate::patterns::{compute_counts, count_s, verify_sandwich, CatalogStore, Catalogs};
use crate::theory::{lambda, params_for_model};

/// Seed stream for bootstrap resampling, kept apart from field seeds.
const BOOTSTRAP_STREAM: u64 = u64::MAX;
const CONFIDENCE: f64 = 0.95;
const WILSON_Z: f64 = 1.959_963_984_540_054;

/// One replicate for one `(n, k)`. Counts are empty when the replicate
/// failed or approximators were not requested.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRow {
    pub n: usize,
    pub k: usize,
    pub replicate: u64,
    pub seed: u64,
    pub u: f64,
    pub beta: Option<u64>,
    pub s: Option<u64>,
    pub s_check: Option<u64>,
    pub n_count: Option<u64>,
    pub n_check: Option<u64>,
    pub l: Option<u128>,
    pub l_check: Option<u128>,
    pub d_boundary: Option<u64>,
    pub sandwich_ok: Option<bool>,
    pub error: String,
}

impl ReplicateRow {
    fn empty(n: usize, k: usize, replicate: u64, seed: u64, u: f64) -> Self {
        ReplicateRow {
            n,
            k,
            replicate,
            seed,
            u,
            beta: None,
            s: None,
            s_check: None,
            n_count: None,
            n_check: None,
            l: None,
            l_check: None,
            d_boundary: None,
            sandwich_ok: None,
            error: String::new(),
        }
    }

    pub fn failed(&self) -> bool {
        !self.error.is_empty()
    }
}

/// Summary of the replicates of one `(n, k)`, computed from rows alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub n: usize,
    pub k: usize,
    pub u: f64,
    pub lambda: Option<f64>,
    pub replicates: u64,
    pub failures: u64,
    pub mean_beta: f64,
    pub var_beta: f64,
    /// Replicate counts of `β = j` for `j = 0, 1, ...`.
    pub pmf: Vec<u64>,
    pub p_zero: f64,
    pub p_zero_ci: Interval,
    pub mean_ratio: Option<f64>,
    pub mean_ratio_ci: Interval,
    pub var_ratio: Option<f64>,
    pub var_over_lambda_sq: Option<f64>,
    /// Against `Poi(mean β)`.
    pub tv_empirical_mean: f64,
    pub tv_empirical_mean_ci: Interval,
    /// Against `Poi(λ)`.
    pub tv_lambda: Option<f64>,
    pub skewness: Option<f64>,
    pub excess_kurtosis: Option<f64>,
    /// Of `(β - mean β) / √λ` against `N(0, 1)`.
    pub ks: Option<f64>,
    pub mean_s: f64,
    pub mean_s_ci: Interval,
    /// Closed form of `E[S]` for independent fields.
    pub exact_mean_s: Option<f64>,
    pub sandwich_failures: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub config: ExperimentConfig,
    pub config_fingerprint: String,
    pub model_fingerprint: String,
    pub warnings: Vec<String>,
    pub clt_window: Vec<CltWindow>,
    pub rows: Vec<ReplicateRow>,
    pub summaries: Vec<CellSummary>,
}

impl SimulationReport {
    pub fn summary(&self, n: usize, k: usize) -> Option<&CellSummary> {
        self.summaries.iter().find(|s| s.n == n && s.k == k)
    }

    pub fn rows_for(&self, n: usize, k: usize) -> impl Iterator<Item = &ReplicateRow> {
        self.rows.iter().filter(move |r| r.n == n && r.k == k)
    }
}

fn replicate_rows(
    config: &ExperimentConfig,
    sample: &FieldSample,
    levels: &[(usize, f64)],
    catalogs: &[Option<Catalogs>],
    replicate: u64,
) -> Vec<ReplicateRow> {
    levels
        .iter()
        .zip(catalogs)
        .map(|(&(k, u), cats)| {
            let mut row = ReplicateRow::empty(sample.n, k, replicate, sample.seed, u);
            let mut run = || -> Result<()> {
                let complex = build_complex(&sample.excursion_vertices(u), k + 1)?;
                let b = betti(&complex, k, 2)?;
                row.beta = Some(b.get(k));
                row.s = Some(count_s(sample, u, k)?);
                if let Some(cats) = cats {
                    let c = compute_counts(sample, &complex, u, k, cats, config.caps)?;
                    row.s_check = Some(c.s_check);
                    row.n_count = Some(c.n);
                    row.n_check = Some(c.n_check);
                    row.l = Some(c.l);
                    row.l_check = Some(c.l_check);
                    row.d_boundary = Some(c.d_boundary);
                    row.sandwich_ok = Some(verify_sandwich(&complex, &b, &c).all_hold());
                }
                Ok(())
            };
            if let Err(e) = run() {
                row.error = e.to_string();
            }
            row
        })
        .collect()
}

/// Sample `R` fields per window radius and record `β_k` and the
/// approximators for every requested degree.
///
/// Replicate `r` uses the field seeded by `derive_seed(seed, r)` for every
/// degree, and rows come back in `(n, k, r)` order whatever `workers` is.
pub fn run_experiment(config: &ExperimentConfig, workers: usize) -> Result<SimulationReport> {
    config.validate()?;
    let warnings = config.assumption_warnings()?;
    let clt_window = config.clt_window()?;
    let d = config.d();
    let catalogs: Vec<Option<Catalogs>> = if config.approximators {
        let store = CatalogStore::from_env();
        config.ks.iter().map(|&k| Catalogs::load(&store, d, k).map(Some)).collect::<Result<_>>()?
    } else {
        vec![None; config.ks.len()]
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidParameter(format!("worker pool: {e}")))?;

    let mut rows = Vec::new();
    for &n in &config.ns {
        let levels: Vec<(usize, f64)> =
            config.ks.iter().map(|&k| Ok((k, config.level_for(n, k)?))).collect::<Result<_>>()?;
        let sampler = FieldSampler::new(&config.model, n)?;
        let per_replicate: Vec<Vec<ReplicateRow>> = pool.install(|| {
            (0..config.replicates)
                .into_par_iter()
                .map(|r| {
                    let sample = sampler.sample(derive_seed(config.seed, r));
                    replicate_rows(config, &sample, &levels, &catalogs, r)
                })
                .collect()
        });
        for (i, _) in levels.iter().enumerate() {
            rows.extend(per_replicate.iter().map(|rs| rs[i].clone()));
        }
    }
    if let Some(budget) = config.failure_budget {
        let failed = rows.iter().filter(|r| r.failed()).count() as u64;
        if failed > budget {
            let first = rows.iter().find(|r| r.failed()).map(|r| r.error.clone()).unwrap_or_default();
            return Err(Error::LimitExceeded(format!(
                "{failed} failed replicates exceed the budget of {budget}; first: {first}"
            )));
        }
    }
    let summaries = summarize(config, &rows)?;
    Ok(SimulationReport {
        config: config.clone(),
        config_fingerprint: config.fingerprint(),
        model_fingerprint: config.model.fingerprint(),
        warnings,
        clt_window,
        rows,
        summaries,
    })
}

/// `E[S_{n,k}(u)]` for an independent field: `(2n+1)^d p` when `k = 0`,
/// else `(2n+1)^d C(d, k+1) p^{2(k+1)}` with `p = P{Z ≥ u}`.
pub fn exact_mean_s_iid(d: usize, k: usize, n: usize, u: f64) -> f64 {
    let sites = ((2 * n + 1) as f64).powi(d as i32);
    let p = normal_sf(u);
    if k == 0 {
        sites * p
    } else {
        sites * binomial(d, k + 1) as f64 * p.powi(2 * (k as i32 + 1))
    }
}

fn summarize_cell(
    config: &ExperimentConfig,
    n: usize,
    k: usize,
    u: f64,
    cell: &[&ReplicateRow],
    index: u64,
) -> Result<CellSummary> {
    let ok: Vec<&ReplicateRow> = cell.iter().copied().filter(|r| !r.failed()).collect();
    let betas: Vec<u64> = ok.iter().filter_map(|r| r.beta).collect();
    let bf: Vec<f64> = betas.iter().map(|&b| b as f64).collect();
    let sf: Vec<f64> = ok.iter().filter_map(|r| r.s).map(|s| s as f64).collect();
    let lam = if u > 0.0 { params_for_model(&config.model, k).and_then(|p| lambda(&p, n, u)).ok() } else { None };
    let seed = derive_seed(derive_seed(config.seed, BOOTSTRAP_STREAM), index);
    let resamples = config.bootstrap_resamples;
    let empty = bf.is_empty();

    let mean_beta = if empty { f64::NAN } else { mean(&bf) };
    let var_beta = variance(&bf);
    let mut pmf = vec![0u64; betas.iter().max().map_or(0, |&m| m as usize + 1)];
    for &b in &betas {
        pmf[b as usize] += 1;
    }
    let zeros = pmf.first().copied().unwrap_or(0);
    let (tv_empirical_mean, tv_lambda) = if empty {
        (f64::NAN, None)
    } else {
        (tv_to_poisson(&betas, mean_beta)?, lam.map(|l| tv_to_poisson(&betas, l)).transpose()?)
    };
    let tv_stat = |xs: &[f64]| {
        let ints: Vec<u64> = xs.iter().map(|&x| x as u64).collect();
        tv_to_poisson(&ints, mean(xs)).unwrap_or(f64::NAN)
    };
    let clt = match lam {
        Some(l) if l > 0.0 && !empty => Some(clt_statistics(&bf, mean_beta, l.sqrt())?),
        _ => None,
    };
    Ok(CellSummary {
        n,
        k,
        u,
        lambda: lam,
        replicates: cell.len() as u64,
        failures: (cell.len() - ok.len()) as u64,
        mean_beta,
        var_beta,
        pmf,
        p_zero: zeros as f64 / betas.len().max(1) as f64,
        p_zero_ci: wilson_interval(zeros, betas.len() as u64, WILSON_Z),
        mean_ratio: lam.map(|l| mean_beta / l),
        mean_ratio_ci: match lam {
            Some(l) => bootstrap_ci(&bf, |xs| mean(xs) / l, resamples, seed, CONFIDENCE),
            None => Interval::UNBOUNDED,
        },
        var_ratio: lam.map(|l| var_beta / l),
        var_over_lambda_sq: lam.map(|l| var_beta / (l * l)),
        tv_empirical_mean,
        tv_empirical_mean_ci: bootstrap_ci(&bf, tv_stat, resamples, derive_seed(seed, 1), CONFIDENCE),
        tv_lambda,
        skewness: clt.and_then(|c| c.skewness),
        excess_kurtosis: clt.and_then(|c| c.excess_kurtosis),
        ks: clt.map(|c| c.ks),
        mean_s: if sf.is_empty() { f64::NAN } else { mean(&sf) },
        mean_s_ci: bootstrap_ci(&sf, mean, resamples, derive_seed(seed, 2), CONFIDENCE),
        exact_mean_s: config.model.is_iid().then(|| exact_mean_s_iid(config.d(), k, n, u)),
        sandwich_failures: ok.iter().filter(|r| r.sandwich_ok == Some(false)).count() as u64,
    })
}

/// Per-`(n, k)` summaries, a pure function of the config and the rows.
pub fn summarize(config: &ExperimentConfig, rows: &[ReplicateRow]) -> Result<Vec<CellSummary>> {
    let mut out = Vec::new();
    let mut index = 0;
    for &n in &config.ns {
        for &k in &config.ks {
            let cell: Vec<&ReplicateRow> = rows.iter().filter(|r| r.n == n && r.k == k).collect();
            let u = match cell.first() {
                Some(r) => r.u,
                None => config.level_for(n, k)?,
            };
            out.push(summarize_cell(config, n, k, u, &cell, index)?);
            index += 1;
        }
    }
    Ok(out)
}

/// `config.json`, `rows.csv` and `summary.json` under `dir`.
pub fn write_report(report: &SimulationReport, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("config.json"), report.config.to_json() + "\n")?;
    let mut w = csv::Writer::from_path(dir.join("rows.csv"))?;
    for r in &report.rows {
        w.serialize(r)?;
    }
    w.flush()?;
    #[derive(Serialize)]
    struct SummaryFile<'a> {
        config_fingerprint: &'a str,
        model_fingerprint: &'a str,
        warnings: &'a [String],
        clt_window: &'a [CltWindow],
        summaries: &'a [CellSummary],
    }
    let summary = SummaryFile {
        config_fingerprint: &report.config_fingerprint,
        model_fingerprint: &report.model_fingerprint,
        warnings: &report.warnings,
        clt_window: &report.clt_window,
        summaries: &report.summaries,
    };
    fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&summary)? + "\n")?;
    Ok(())
}

pub fn read_rows(path: &Path) -> Result<Vec<ReplicateRow>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

/// Rebuild a report from a directory written by [`write_report`].
pub fn read_report(dir: &Path) -> Result<SimulationReport> {
    let config = ExperimentConfig::from_json(&fs::read_to_string(dir.join("config.json"))?)?;
    let rows = read_rows(&dir.join("rows.csv"))?;
    let summaries = summarize(&config, &rows)?;
    let warnings = config.assumption_warnings()?;
    Ok(SimulationReport {
        config_fingerprint: config.fingerprint(),
        model_fingerprint: config.model.fingerprint(),
        clt_window: config.clt_window()?,
        warnings,
        rows,
        summaries,
        config,
    })
}
