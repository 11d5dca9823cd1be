//! Replicate experiments and the statistics used to judge them.
//!
//! [`run_experiment`] samples `R` fields per window radius, computes `β_k`
//! and the approximators, and summarizes each `(n, k)` cell. Rows depend on
//! the master seed only, never on the worker count. A report persists as
//! `config.json`, `rows.csv` and `summary.json`, and every summary is
//! recomputed from the rows by [`summarize`].
//!
//! `rows.csv` columns, in order: `n, k, replicate, seed, u, beta, s,
//! s_check, n_count, n_check, l, l_check, d_boundary, sandwich_ok, error`.
//! Empty cells mean "not computed"; `error` is empty on success.

mod config;
mod harness;
mod orthant;
mod stats;
mod suites;
mod verdicts;

pub use config::{CltWindow, ExperimentConfig, LevelMode, NuSchedule, CONFIG_VERSION};
pub use harness::{
    exact_mean_s_iid, read_report, read_rows, run_experiment, summarize, write_report, CellSummary, ReplicateRow,
    SimulationReport,
};
pub use orthant::{orthant_probability, orthant_probability_shifted, OrthantEstimate};
pub use stats::{
    bootstrap_ci, clt_statistics, mean, normal_cdf, normal_sf, poisson_pmf, tv_to_poisson, variance, wilson_interval,
    CltStatistics, Interval,
};
pub use suites::{run_suite, Suite, SuiteOptions, SuiteOutcome};
pub use verdicts::{
    default_mean_tolerance, mean_ratio_verdict, regime_sweep, trend, MeanRatioVerdict, SweepRow, SweepTable, Trend,
    TrendVerdict,
};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::CovarianceModel;
    use nalgebra::DMatrix;
    use rand::SeedableRng;
    use rand_distr::{Distribution, Poisson};

    fn iid_config(n: usize, u: f64, r: u64) -> ExperimentConfig {
        let mut c = ExperimentConfig::new(CovarianceModel::iid(2), vec![0], vec![n], LevelMode::Fixed { u }, r, 5);
        c.approximators = false;
        c
    }

    #[test]
    fn mills_ratios() {
        // u P{Z ≥ u} / φ(u), reference from 30-digit evaluation
        let phi = |u: f64| (-u * u / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt();
        for (u, expect) in [
            (3.0, 0.913_770_896_130_309_9),
            (4.0, 0.946_609_531_654_242_7),
            (5.0, 0.964_040_523_576_578_9),
            (6.0, 0.974_265_965_381_204_8),
        ] {
            let got = u * normal_sf(u) / phi(u);
            assert!((got - expect).abs() < 1e-14, "u = {u}: {got}");
        }
    }

    #[test]
    fn tv_examples() {
        let e = 1.0 - (-1.0f64).exp();
        assert!((tv_to_poisson(&[0; 10], 1.0).unwrap() - e).abs() < 1e-15);
        assert!(tv_to_poisson(&[0, 0, 0], 0.0).unwrap() < 1e-15);
        let a = tv_to_poisson(&[3, 0, 1, 1, 5], 1.7).unwrap();
        let b = tv_to_poisson(&[1, 5, 0, 3, 1], 1.7).unwrap();
        assert_eq!(a, b);
        assert!((0.0..=1.0).contains(&a));
    }

    #[test]
    fn clt_examples() {
        let c = clt_statistics(&[0.0; 5], 0.0, 1.0).unwrap();
        assert!(c.skewness.is_none());
        assert!((c.ks - 0.5).abs() < 1e-15);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let pois = Poisson::new(100.0).unwrap();
        let xs: Vec<f64> = (0..100_000).map(|_| pois.sample(&mut rng)).collect();
        let c = clt_statistics(&xs, 100.0, 10.0).unwrap();
        assert!((c.skewness.unwrap() - 0.1).abs() < 0.03);
        assert!(c.excess_kurtosis.unwrap().abs() < 0.1);
    }

    #[test]
    fn normal_samples_are_close_to_normal() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let xs: Vec<f64> = (0..10_000).map(|_| rand_distr::StandardNormal.sample(&mut rng)).collect();
        assert!(clt_statistics(&xs, 0.0, 1.0).unwrap().ks < 0.02);
    }

    #[test]
    fn orthant_examples() {
        let i2 = DMatrix::identity(2, 2);
        let e = orthant_probability(&i2, &[0.0, 0.0], 200_000, 3).unwrap();
        assert!((e.estimate - 0.25).abs() < 3.0 * e.std_error);
        let w = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0]);
        let e = orthant_probability(&w, &[0.0, 0.0], 200_000, 4).unwrap();
        assert!((e.estimate - 1.0 / 3.0).abs() < 4.0 * e.std_error);
        let one = DMatrix::identity(1, 1);
        let e = orthant_probability(&one, &[2.0], 200_000, 5).unwrap();
        assert!((e.estimate - normal_sf(2.0)).abs() < 4.0 * e.std_error);
        let s = orthant_probability_shifted(&one, &[5.0], 200_000, 6).unwrap();
        assert!((s.estimate - normal_sf(5.0)).abs() < 4.0 * s.std_error);
        assert!(s.std_error < 0.02 * s.estimate);
        assert_eq!(
            orthant_probability(&w, &[0.5, 1.0], 1000, 9).unwrap(),
            orthant_probability(&w, &[0.5, 1.0], 1000, 9).unwrap()
        );
    }

    #[test]
    fn empty_and_cold_experiments() {
        let r = run_experiment(&iid_config(2, 1.0, 0), 1).unwrap();
        assert!(r.rows.is_empty());
        let r = run_experiment(&iid_config(3, 10.0, 100), 2).unwrap();
        assert_eq!(r.rows.len(), 100);
        assert!(r.rows.iter().all(|row| row.beta == Some(0)));
        assert_eq!(r.summaries[0].p_zero, 1.0);
    }

    #[test]
    fn reports_do_not_depend_on_workers() {
        let mut c = ExperimentConfig::new(
            CovarianceModel::geometric(2, 0.3, 0.5).unwrap(),
            vec![0, 1],
            vec![3],
            LevelMode::Fixed { u: 1.5 },
            50,
            11,
        );
        c.bootstrap_resamples = 200;
        let a = run_experiment(&c, 1).unwrap();
        let b = run_experiment(&c, 8).unwrap();
        assert_eq!(a, b);
        assert!(a.rows.iter().all(|r| !r.failed() && r.sandwich_ok == Some(true)));
    }

    #[test]
    fn report_round_trips_through_disk() {
        let mut c = iid_config(4, 1.5, 30);
        c.approximators = true;
        c.override_assumptions = true;
        c.ks = vec![0, 1];
        c.bootstrap_resamples = 100;
        let r = run_experiment(&c, 2).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_report(&r, dir.path()).unwrap();
        let back = read_report(dir.path()).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn degenerate_mean_ratio() {
        let r = run_experiment(&iid_config(4, 2.0, 1), 1).unwrap();
        let v = mean_ratio_verdict(&r, 4, 0, None).unwrap();
        assert_eq!(v.pass, None);
        assert_eq!(v.ci, Interval::UNBOUNDED);
    }

    #[test]
    fn mean_of_s_matches_closed_form() {
        let mut c = iid_config(6, 1.0, 400);
        c.override_assumptions = true;
        c.ks = vec![0, 1];
        let r = run_experiment(&c, 4).unwrap();
        for s in &r.summaries {
            let exact = s.exact_mean_s.unwrap();
            let ci = s.mean_s_ci;
            let slack = 0.02 * exact;
            assert!(ci.overlaps(exact - slack, exact + slack), "k = {}: {:?} vs {exact}", s.k, ci);
        }
    }

    #[test]
    fn suites_pass_on_small_runs() {
        let opts = SuiteOptions {
            model: CovarianceModel::geometric(2, 0.3, 0.5).unwrap(),
            n: 3,
            levels: vec![1.5],
            replicates: 20,
            seed: 7,
            caps: Default::default(),
        };
        for suite in Suite::parse("all").unwrap() {
            let o = run_suite(suite, &opts, 2).unwrap();
            assert!(o.passed, "{:?}: {:?}", suite, o.lines);
        }
        assert!(Suite::parse("nope").is_err());
    }

    #[test]
    fn trends() {
        assert_eq!(trend(&[0.1, 0.2, 0.3]), Trend::Increasing);
        assert_eq!(trend(&[0.3, 0.2]), Trend::Decreasing);
        assert_eq!(trend(&[0.3, 0.3]), Trend::Neither);
    }
}
